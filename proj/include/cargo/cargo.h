#ifndef CARGO_CARGO_H
#define CARGO_CARGO_H

/* C interface to the cargo estimator library. Objects are opaque handles
 * created by cargo_*_create / cargo_*_read style calls and released with the
 * matching *_free. Every fallible call returns a cargo_status; on failure
 * cargo_last_error() holds a message for the calling thread. */

#include <stddef.h>

#if defined(CARGO_BUILDING_LIBRARY)
#define CARGO_API __attribute__((visibility("default")))
#else
#define CARGO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cargo_status {
  CARGO_OK = 0,
  CARGO_INVALID_ARGUMENT = 1,
  CARGO_DIMENSION_MISMATCH = 2,
  CARGO_NOT_POSITIVE_DEFINITE = 3,
  CARGO_EIGENSOLVER_FAILURE = 4,
  CARGO_PARSE_ERROR = 5,
  CARGO_IO_ERROR = 6,
  CARGO_NOT_CONVERGED = 7,
  CARGO_INTERNAL = 8
} cargo_status;

typedef struct cargo_matrix cargo_matrix;
typedef struct cargo_spec cargo_spec;
typedef struct cargo_result cargo_result;

CARGO_API const char* cargo_last_error(void);
CARGO_API const char* cargo_status_name(cargo_status status);
CARGO_API void cargo_string_free(char* s);

/* Symmetric matrices. from_array reads p*p row-major values, rejects
 * asymmetry above 1e-9 and stores (Z + Z^T) / 2. */
CARGO_API cargo_status cargo_matrix_from_array(size_t p, const double* row_major, cargo_matrix** out);
CARGO_API cargo_status cargo_matrix_read_csv(const char* path, cargo_matrix** out);
CARGO_API cargo_status cargo_matrix_write_csv(const cargo_matrix* m, const char* path);
CARGO_API size_t cargo_matrix_dim(const cargo_matrix* m);
CARGO_API cargo_status cargo_matrix_to_array(const cargo_matrix* m, double* row_major);
CARGO_API cargo_status cargo_matrix_min_eig(const cargo_matrix* m, double* out);
CARGO_API void cargo_matrix_free(cargo_matrix* m);

/* Constraint specs. types holds one integer per node; adjacency is p*p
 * row-major 0/1, symmetric with zero diagonal. */
CARGO_API cargo_status cargo_spec_from_adjacency(size_t p, const int* types, const int* adjacency,
                                                 cargo_spec** out);
/* neighbor_mode: "first-shell" or "k:<c>"; distance_mode: "min-image" or
 * "paper6"; box may be NULL for JSON cells. */
CARGO_API cargo_status cargo_spec_from_cell(const char* cell_path, const double* box, const char* neighbor_mode,
                                            const char* distance_mode, cargo_spec** out);
CARGO_API size_t cargo_spec_dim(const cargo_spec* spec);
CARGO_API cargo_status cargo_project(const cargo_spec* spec, const cargo_matrix* z, cargo_matrix** out);
CARGO_API void cargo_spec_free(cargo_spec* spec);

typedef struct cargo_solver_options {
  double nu; /* <= 0 selects p + 1 */
  double scale_b; /* prior scale B = scale_b * I */
  double eps_floor;
  double gamma0;
  double eta;
  int k_max;
  double inner_tol_scale;
  double inner_tol_base;
  int l_max;
  double gap_tol;
} cargo_solver_options;

CARGO_API void cargo_solver_options_default(cargo_solver_options* options);
/* Solves for the scatter matrix of n_samples type-centered samples. A run
 * that ends with a gap above gap_tol still returns CARGO_OK; check
 * cargo_result_converged. */
CARGO_API cargo_status cargo_solve(const cargo_spec* spec, const cargo_matrix* scatter, size_t n_samples,
                                   const cargo_solver_options* options, cargo_result** out);
CARGO_API int cargo_result_converged(const cargo_result* r);
CARGO_API double cargo_result_gap(const cargo_result* r);
CARGO_API double cargo_result_objective(const cargo_result* r);
CARGO_API cargo_status cargo_result_x(const cargo_result* r, cargo_matrix** out);
CARGO_API cargo_status cargo_result_y(const cargo_result* r, cargo_matrix** out);
CARGO_API void cargo_result_free(cargo_result* r);

/* Runs a subcommand: "estimate", "simulate", "distances" or "glasso".
 * config_path may be NULL; overrides_json is merged over the file. On
 * success or CARGO_NOT_CONVERGED, *summary_json receives a JSON summary to
 * be released with cargo_string_free. */
CARGO_API cargo_status cargo_run(const char* command, const char* config_path, const char* overrides_json,
                                 char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
