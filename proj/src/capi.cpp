#include "cargo/cargo.h"

#include <json.hpp>

#include <cstring>
#include <new>
#include <string>

#include "cargo/harness.hpp"

struct cargo_matrix {
  cargo::SymMatrix m;
};

struct cargo_spec {
  cargo::ConstraintSpec spec;
};

struct cargo_result {
  cargo::SolveResult result;
};

namespace {

thread_local std::string last_error;

cargo_status fail(cargo_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
cargo_status guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const cargo::Error& e) {
    return fail(static_cast<cargo_status>(e.status()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CARGO_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CARGO_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json paths_json(const std::vector<std::filesystem::path>& files) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : files) out.push_back(f.string());
  return out;
}

}  // namespace

extern "C" {

const char* cargo_last_error(void) { return last_error.c_str(); }

const char* cargo_status_name(cargo_status status) {
  switch (status) {
    case CARGO_OK: return "ok";
    case CARGO_INVALID_ARGUMENT: return "invalid argument";
    case CARGO_DIMENSION_MISMATCH: return "dimension mismatch";
    case CARGO_NOT_POSITIVE_DEFINITE: return "not positive definite";
    case CARGO_EIGENSOLVER_FAILURE: return "eigensolver failure";
    case CARGO_PARSE_ERROR: return "parse error";
    case CARGO_IO_ERROR: return "i/o error";
    case CARGO_NOT_CONVERGED: return "not converged";
    case CARGO_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void cargo_string_free(char* s) { std::free(s); }

cargo_status cargo_matrix_from_array(size_t p, const double* row_major, cargo_matrix** out) {
  return guarded([&] {
    if (!row_major || !out) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    const auto n = static_cast<Eigen::Index>(p);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(row_major, n, n);
    *out = new cargo_matrix{cargo::SymMatrix::from_dense(m)};
    return CARGO_OK;
  });
}

cargo_status cargo_matrix_read_csv(const char* path, cargo_matrix** out) {
  return guarded([&] {
    if (!path || !out) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    *out = new cargo_matrix{cargo::read_matrix_csv(path)};
    return CARGO_OK;
  });
}

cargo_status cargo_matrix_write_csv(const cargo_matrix* m, const char* path) {
  return guarded([&] {
    if (!m || !path) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    cargo::write_matrix_csv(m->m, path);
    return CARGO_OK;
  });
}

size_t cargo_matrix_dim(const cargo_matrix* m) { return m ? m->m.dim() : 0; }

cargo_status cargo_matrix_to_array(const cargo_matrix* m, double* row_major) {
  return guarded([&] {
    if (!m || !row_major) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    const std::size_t p = m->m.dim();
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) row_major[i * p + j] = m->m(i, j);
    }
    return CARGO_OK;
  });
}

cargo_status cargo_matrix_min_eig(const cargo_matrix* m, double* out) {
  return guarded([&] {
    if (!m || !out) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    *out = cargo::min_eig(m->m);
    return CARGO_OK;
  });
}

void cargo_matrix_free(cargo_matrix* m) { delete m; }

cargo_status cargo_spec_from_adjacency(size_t p, const int* types, const int* adjacency, cargo_spec** out) {
  return guarded([&] {
    if (!types || !adjacency || !out) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    const auto n = static_cast<Eigen::Index>(p);
    const Eigen::Map<const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(adjacency, n, n);
    *out = new cargo_spec{cargo::build_spec_from_adjacency(std::span<const int>(types, p), Eigen::MatrixXi(a))};
    return CARGO_OK;
  });
}

cargo_status cargo_spec_from_cell(const char* cell_path, const double* box, const char* neighbor_mode,
                                  const char* distance_mode, cargo_spec** out) {
  return guarded([&] {
    if (!cell_path || !out) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    std::optional<std::array<double, 3>> b;
    if (box) b = std::array<double, 3>{box[0], box[1], box[2]};
    const cargo::Supercell cell = cargo::read_supercell(cell_path, b);
    cargo::NeighborPolicy policy;
    if (neighbor_mode) policy = cargo::parse_neighbor_mode(neighbor_mode, policy);
    if (distance_mode) policy.distance_mode = cargo::parse_distance_mode(distance_mode);
    *out = new cargo_spec{cargo::build_neighbors(cell, policy)};
    return CARGO_OK;
  });
}

size_t cargo_spec_dim(const cargo_spec* spec) { return spec ? spec->spec.p() : 0; }

cargo_status cargo_project(const cargo_spec* spec, const cargo_matrix* z, cargo_matrix** out) {
  return guarded([&] {
    if (!spec || !z || !out) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    *out = new cargo_matrix{cargo::project_onto_n(z->m, spec->spec)};
    return CARGO_OK;
  });
}

void cargo_spec_free(cargo_spec* spec) { delete spec; }

void cargo_solver_options_default(cargo_solver_options* o) {
  if (!o) return;
  const cargo::SolverConfig d;
  o->nu = 0.0;
  o->scale_b = 1.0;
  o->eps_floor = d.eps_floor;
  o->gamma0 = d.gamma0;
  o->eta = d.eta;
  o->k_max = d.k_max;
  o->inner_tol_scale = d.inner_tol_scale;
  o->inner_tol_base = d.inner_tol_base;
  o->l_max = d.l_max;
  o->gap_tol = d.gap_tol;
}

cargo_status cargo_solve(const cargo_spec* spec, const cargo_matrix* scatter, size_t n_samples,
                         const cargo_solver_options* options, cargo_result** out) {
  return guarded([&] {
    if (!spec || !scatter || !out) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    cargo_solver_options o;
    cargo_solver_options_default(&o);
    if (options) o = *options;
    cargo::SolverConfig c;
    if (o.nu > 0.0) c.nu = o.nu;
    if (!(o.scale_b > 0.0)) return fail(CARGO_INVALID_ARGUMENT, "scale_b must be positive");
    if (o.scale_b != 1.0) c.scale_b = cargo::SymMatrix::identity(spec->spec.p()) * o.scale_b;
    c.eps_floor = o.eps_floor;
    c.gamma0 = o.gamma0;
    c.eta = o.eta;
    c.k_max = o.k_max;
    c.inner_tol_scale = o.inner_tol_scale;
    c.inner_tol_base = o.inner_tol_base;
    c.l_max = o.l_max;
    c.gap_tol = o.gap_tol;
    *out = new cargo_result{cargo::solve_scatter(scatter->m, n_samples, spec->spec, c)};
    return CARGO_OK;
  });
}

int cargo_result_converged(const cargo_result* r) { return r && r->result.converged ? 1 : 0; }
double cargo_result_gap(const cargo_result* r) { return r ? r->result.gap : 0.0; }
double cargo_result_objective(const cargo_result* r) { return r ? r->result.f_star : 0.0; }

cargo_status cargo_result_x(const cargo_result* r, cargo_matrix** out) {
  return guarded([&] {
    if (!r || !out) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    *out = new cargo_matrix{r->result.x_star};
    return CARGO_OK;
  });
}

cargo_status cargo_result_y(const cargo_result* r, cargo_matrix** out) {
  return guarded([&] {
    if (!r || !out) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    *out = new cargo_matrix{r->result.y_star};
    return CARGO_OK;
  });
}

void cargo_result_free(cargo_result* r) { delete r; }

cargo_status cargo_run(const char* command, const char* config_path, const char* overrides_json,
                       char** summary_json) {
  return guarded([&] {
    if (!command || !summary_json) return fail(CARGO_INVALID_ARGUMENT, "null argument");
    *summary_json = nullptr;
    std::optional<std::filesystem::path> file;
    if (config_path) file = config_path;
    const cargo::RunConfig cfg = cargo::load_run_config(file, overrides_json ? overrides_json : "");
    const std::string cmd = command;
    nlohmann::json s;
    cargo_status status = CARGO_OK;
    if (cmd == "estimate") {
      const auto r = cargo::run_estimate(cfg);
      s["files"] = paths_json(r.files);
      s["converged"] = r.report.converged;
      s["gap"] = r.report.gap;
      s["F_star"] = r.report.f_star;
      s["kappa"] = r.report.kappa;
      nlohmann::json beta = nlohmann::json::object();
      for (const auto& [k, v] : r.report.beta) beta[k] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
      s["beta"] = beta;
      if (!r.report.converged) {
        status = fail(CARGO_NOT_CONVERGED, "solver stopped with gap " + std::to_string(r.report.gap) +
                                               " above gap_tol");
      }
    } else if (cmd == "simulate") {
      const auto r = cargo::run_simulate(cfg);
      s["files"] = paths_json(r.files);
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& row : r.rows) {
        rows.push_back({{"method", row.method},
                        {"p", row.p},
                        {"reps_used", row.used},
                        {"failed", row.failed},
                        {"not_converged", row.not_converged},
                        {"aver_x100", 100.0 * row.aggregate}});
      }
      s["rows"] = rows;
    } else if (cmd == "distances") {
      const auto r = cargo::run_distances(cfg);
      s["files"] = paths_json(r.files);
      s["p"] = r.neighbors.size();
      std::size_t lo = r.neighbors.empty() ? 0 : r.neighbors.front().size();
      std::size_t hi = lo;
      for (const auto& n : r.neighbors) {
        lo = std::min(lo, n.size());
        hi = std::max(hi, n.size());
      }
      s["degree_min"] = lo;
      s["degree_max"] = hi;
      s["census"] = r.census;
    } else if (cmd == "glasso") {
      const auto r = cargo::run_glasso(cfg);
      s["files"] = paths_json(r.files);
      s["lambda"] = r.fit.lambda;
      s["nnz"] = cargo::count_nnz(r.fit.x);
      s["converged"] = r.fit.converged;
      s["kkt_max_violation"] = r.fit.kkt.max_violation;
      if (!r.fit.converged) status = fail(CARGO_NOT_CONVERGED, "glasso reached the sweep cap without a KKT certificate");
    } else {
      return fail(CARGO_INVALID_ARGUMENT, "unknown command '" + cmd + "'");
    }
    *summary_json = dup_string(s.dump(2));
    return status;
  });
}

}  // extern "C"
