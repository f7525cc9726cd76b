#pragma once

// Graphical lasso: argmin_X -log det X + tr(S X) + lambda |X|_1, with the
// l1 norm taken over every entry including the diagonal. Solved by primal
// block coordinate descent over columns, which keeps X positive definite and
// the objective nonincreasing.

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "cargo/car_model.hpp"
#include "cargo/lattice.hpp"
#include "cargo/spectral.hpp"

namespace cargo {

struct GlassoConfig {
  double lambda = 0.1;
  int max_sweeps = 1000;
  double kkt_tol = 1e-4;
  double inner_tol = 1e-12;  // coordinate descent, max |change| in the lasso
  int max_inner = 10000;
  // A sweep ends the solve once the KKT violation is at most stop_tol, or
  // X moved by at most sweep_tol (relative) with the certificate passing.
  double stop_tol = 1e-7;
  double sweep_tol = 1e-10;
  // S is replaced by S + ridge_scale * tr(S) / p * I before solving.
  double ridge_scale = 1e-6;

  void validate() const;
};

struct KktReport {
  double max_violation = 0.0;
  bool pass = false;
};

struct GlassoResult {
  SymMatrix x;
  double lambda = 0.0;
  double ridge = 0.0;
  int sweeps = 0;
  bool converged = false;
  double objective = 0.0;
  std::vector<double> objective_trace;  // after each sweep, starting with X^0
  KktReport kkt;
};

double glasso_objective(const SymMatrix& x, const SymMatrix& s, double lambda);

// Checks the optimality conditions against W = X^{-1} computed afresh. `s`
// is the matrix the solver actually used (after the ridge).
KktReport glasso_kkt(const SymMatrix& x, const SymMatrix& s, double lambda, double tol);

// `warm` must be positive definite when given.
GlassoResult glasso(const SymMatrix& s, const GlassoConfig& config, const SymMatrix* warm = nullptr);

// Entries with |X_ij| > threshold, diagonal included.
std::size_t count_nnz(const SymMatrix& x, double threshold = 1e-8);

struct LambdaTuning {
  double lambda = 0.0;
  std::size_t nnz = 0;
  std::size_t target = 0;
  int steps = 0;
  bool reached = false;  // nnz == target
  bool warning = false;  // target outside the reachable range
  GlassoResult fit;
};

// Bisection on log lambda for a fit with nnz closest to `target`. The search
// never goes below min_lambda_ratio * lambda_max; a target that needs a
// smaller lambda is reported with `warning` set.
LambdaTuning tune_lambda_to_sparsity(const SymMatrix& s, std::size_t target, const GlassoConfig& base,
                                     int max_steps = 40, double min_lambda_ratio = 1e-3);

// Means of X over each unordered off-diagonal class of `spec`, keyed by
// dense type pair.
std::map<TypePair, double> glasso_mse_extract(const SymMatrix& x, const ConstraintSpec& spec);

}  // namespace cargo
