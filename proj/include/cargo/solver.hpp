#pragma once

// MAP estimation of a structured precision matrix under a constrained
// Wishart prior, by penalty decomposition with a proximal Gauss-Seidel inner
// loop. X carries the eigenvalue floor (set M), Y carries the graph
// structure (set N), and a growing quadratic penalty couples the two.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "cargo/car_model.hpp"
#include "cargo/lattice.hpp"
#include "cargo/spectral.hpp"

namespace cargo {

struct SolverConfig {
  std::optional<double> nu;          // degrees of freedom; default p + 1
  std::optional<SymMatrix> scale_b;  // prior scale B; default identity
  double eps_floor = 0.01831563888873418;  // e^-4
  double gamma0 = 1.0;
  double eta = 2.0;
  int k_max = 35;
  // Inner tolerance schedule eps^k = inner_tol_scale * inner_tol_base^k.
  double inner_tol_scale = 1.0;
  double inner_tol_base = 0.5;
  int l_max = 5000;
  double gap_tol = 1e-4;
  bool record_trace = true;

  double nu_for(std::size_t p) const { return nu.value_or(static_cast<double>(p) + 1.0); }
  double inner_tol(int k) const;
  void validate(std::size_t p, std::size_t n_samples) const;
};

// Exponent of det X in the posterior: nu + n - 1 - p (nu - p for one sample).
double logdet_coefficient(double nu, std::size_t p, std::size_t n_samples);

// F(X) = -c log det X + tr(A X) with A = B^-1 + S.
double objective_f(const SymMatrix& x, const SymMatrix& a, double nu, std::size_t p,
                   std::size_t n_samples);

SymMatrix posterior_scale(const SymMatrix& s, const SymMatrix& b);

// argmin_X { alpha (-c log det X + tr(A X)) + 1/2 |X - Z|_F^2 : X >= eps I }
// in closed form through the eigendecomposition of Z / alpha - A.
SymMatrix prox_logdet_block(const SymMatrix& z, double alpha, const SymMatrix& a, double nu,
                            std::size_t p, std::size_t n_samples, double eps_floor);

struct TraceRecord {
  int k = 0;
  int l = 0;
  double gamma = 0.0;
  double f = 0.0;
  double p_gamma = 0.0;
  double gap = 0.0;
  double stop1 = 0.0;
  double stop2 = 0.0;
  double step_x = 0.0;  // |X_l - X_{l-1}|_F, kept in memory only
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  // Header: k,l,gamma,F,P_gamma,gap,stop1,stop2
  void write_csv(const std::filesystem::path& path) const;
};

struct InnerResult {
  SymMatrix x;
  SymMatrix y;
  int iterations = 0;
  bool converged = false;
  // Largest positive excess of G(X_{l+1},Y_{l+1}) + |dX|^2/2 + |dY|^2/2
  // over G(X_l,Y_l) seen in the loop.
  double max_descent_excess = 0.0;
  std::vector<TraceRecord> trace;
};

// One run of the inner loop for a fixed penalty gamma; `k` only labels the
// trace records and selects the stopping tolerance.
InnerResult inner_loop(const SymMatrix& x0, const SymMatrix& y0, double gamma, const SymMatrix& a,
                       const ConstraintSpec& spec, const SolverConfig& config, std::size_t n_samples,
                       int k);

struct OuterRecord {
  int k = 0;
  double gamma = 0.0;
  int inner_iterations = 0;
  bool inner_converged = false;
  double f = 0.0;    // F(X^{k+1})
  double gap = 0.0;  // |X^{k+1} - Y^{k+1}|_F
};

struct SolveResult {
  SymMatrix x_star;
  SymMatrix y_star;
  double gap = 0.0;
  double f_star = 0.0;
  double f_initial = 0.0;  // F(X^0) = F(I)
  SolverTrace trace;
  std::vector<OuterRecord> outer;
  bool converged = false;
  bool inner_all_converged = true;
  double max_descent_excess = 0.0;
  double logdet_coefficient = 0.0;
  SymMatrix a;  // B^-1 + S
};

// Y^0: unit diagonal, min(0.01, 1/(2 max degree)) on allowed positions.
SymMatrix initial_y(const ConstraintSpec& spec);

SolveResult solve_scatter(const SymMatrix& scatter, std::size_t n_samples, const ConstraintSpec& spec,
                          const SolverConfig& config);
// `data` must already be centered by type.
SolveResult solve(const Samples& data, const ConstraintSpec& spec, const SolverConfig& config);

struct LevelBounds {
  double alpha = 0.0;
  double c1 = 0.0;
  double log_c1 = 0.0;  // c1 underflows for large p; the log does not
  double c2 = 0.0;
  double sigma_m = 0.0;
};

// Eigenvalue bounds for the level set {X : F(X) <= alpha}.
LevelBounds level_bounds(double alpha, const SymMatrix& a, double nu, std::size_t p, std::size_t n_samples);

enum class BetaMode { car, raw };

struct ParameterEstimate {
  BetaMode mode = BetaMode::car;
  std::vector<double> kappa;                  // per dense type index
  std::map<TypePair, double> beta;            // pairs with at least one edge
};

// Reads kappa and beta off a matrix in N (normally Y*). car mode inverts the
// CAR entries; raw mode reports the class-common off-diagonal entry.
ParameterEstimate extract_parameters(const SymMatrix& u, const ConstraintSpec& spec, BetaMode mode);

}  // namespace cargo
