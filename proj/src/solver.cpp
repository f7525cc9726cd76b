#include "cargo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace cargo {

namespace {

// Positive root of x^2 / alpha - sigma x - c = 0. For sigma < 0 the textbook
// form cancels, so use the conjugate expression.
double prox_root(double sigma, double alpha, double c) {
  const double r = std::sqrt(sigma * sigma + 4.0 * c / alpha);
  return sigma >= 0.0 ? 0.5 * alpha * (sigma + r) : 2.0 * c / (r - sigma);
}

struct ProxOutput {
  SymMatrix x;
  double logdet = 0.0;
};

// m = Z / alpha - A.
ProxOutput prox_shifted(const Eigen::MatrixXd& m, double alpha, double c, double eps_floor) {
  const auto dec = eigh(SymMatrix::symmetrized(m));
  Eigen::VectorXd z(dec.eigvals.size());
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z(i) = std::max(prox_root(dec.eigvals(i), alpha, c), eps_floor);
    logdet += std::log(z(i));
  }
  return {dec.reconstruct(z), logdet};
}

double squared_norm(const Eigen::MatrixXd& m) { return m.squaredNorm(); }

}  // namespace

double SolverConfig::inner_tol(int k) const { return inner_tol_scale * std::pow(inner_tol_base, k); }

void SolverConfig::validate(std::size_t p, std::size_t n_samples) const {
  if (p == 0) throw InvalidArgument("solver: empty problem");
  if (n_samples == 0) throw InvalidArgument("solver: need at least one sample");
  const double v = nu_for(p);
  if (!std::isfinite(v) || !(v > static_cast<double>(p) - 1.0)) {
    throw InvalidArgument("solver: nu must exceed p - 1");
  }
  if (!(logdet_coefficient(v, p, n_samples) > 0.0)) {
    throw InvalidArgument("solver: nu + n - 1 - p must be positive");
  }
  if (!(eps_floor > 0.0)) throw InvalidArgument("solver: eps_floor must be positive");
  if (!(gamma0 > 0.0)) throw InvalidArgument("solver: gamma0 must be positive");
  if (!(eta > 1.0)) throw InvalidArgument("solver: eta must exceed 1");
  if (k_max < 1) throw InvalidArgument("solver: k_max must be at least 1");
  if (l_max < 1) throw InvalidArgument("solver: l_max must be at least 1");
  if (!(inner_tol_scale > 0.0)) throw InvalidArgument("solver: inner_tol_scale must be positive");
  if (!(inner_tol_base > 0.0 && inner_tol_base < 1.0)) {
    throw InvalidArgument("solver: inner_tol_base must lie in (0, 1)");
  }
  if (!(gap_tol > 0.0)) throw InvalidArgument("solver: gap_tol must be positive");
  if (scale_b) {
    if (scale_b->dim() != p) throw DimensionMismatch("solver: scale_b has the wrong dimension");
    if (!is_positive_definite(*scale_b)) throw NotPositiveDefinite("solver: scale_b is not positive definite");
  }
}

double logdet_coefficient(double nu, std::size_t p, std::size_t n_samples) {
  return nu + static_cast<double>(n_samples) - 1.0 - static_cast<double>(p);
}

double objective_f(const SymMatrix& x, const SymMatrix& a, double nu, std::size_t p, std::size_t n_samples) {
  require_same_dim(x, a, "objective_f");
  return -logdet_coefficient(nu, p, n_samples) * logdet_pd(x) + trace_prod(a, x);
}

SymMatrix posterior_scale(const SymMatrix& s, const SymMatrix& b) {
  require_same_dim(s, b, "posterior_scale");
  return inverse_pd(b) + s;
}

SymMatrix prox_logdet_block(const SymMatrix& z, double alpha, const SymMatrix& a, double nu, std::size_t p,
                            std::size_t n_samples, double eps_floor) {
  require_same_dim(z, a, "prox_logdet_block");
  if (!(alpha > 0.0)) throw InvalidArgument("prox_logdet_block: alpha must be positive");
  if (!(eps_floor > 0.0)) throw InvalidArgument("prox_logdet_block: eps_floor must be positive");
  const double c = logdet_coefficient(nu, p, n_samples);
  if (!(c > 0.0)) throw InvalidArgument("prox_logdet_block: log-det coefficient must be positive");
  const Eigen::MatrixXd m = z.dense() / alpha - a.dense();
  return prox_shifted(m, alpha, c, eps_floor).x;
}

void SolverTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "k,l,gamma,F,P_gamma,gap,stop1,stop2\n";
  out << std::setprecision(17);
  for (const auto& r : records) {
    out << r.k << ',' << r.l << ',' << r.gamma << ',' << r.f << ',' << r.p_gamma << ',' << r.gap << ','
        << r.stop1 << ',' << r.stop2 << '\n';
  }
  if (!out) throw IoError("error writing " + path.string());
}

InnerResult inner_loop(const SymMatrix& x0, const SymMatrix& y0, double gamma, const SymMatrix& a,
                       const ConstraintSpec& spec, const SolverConfig& config, std::size_t n_samples, int k) {
  require_same_dim(x0, a, "inner_loop");
  require_same_dim(y0, a, "inner_loop");
  if (a.dim() != spec.p()) throw DimensionMismatch("inner_loop: spec dimension does not match");
  if (!(gamma > 0.0)) throw InvalidArgument("inner_loop: gamma must be positive");
  const std::size_t p = a.dim();
  const double nu = config.nu_for(p);
  const double c = logdet_coefficient(nu, p, n_samples);
  const double alpha = 1.0 / (gamma + 1.0);
  const double tol = config.inner_tol(k);

  InnerResult out{x0, y0, 0, false, 0.0, {}};
  double g_prev = objective_f(x0, a, nu, p, n_samples) +
                  0.5 * gamma * squared_norm(x0.dense() - y0.dense());

  while (true) {
    const Eigen::MatrixXd& x = out.x.dense();
    const Eigen::MatrixXd& y = out.y.dense();
    // (1/alpha) Z - A with Z = (X + gamma Y) / (gamma + 1).
    ProxOutput px = prox_shifted(x + gamma * y - a.dense(), alpha, c, config.eps_floor);
    SymMatrix y_next = project_onto_n(
        SymMatrix::symmetrized((gamma * px.x.dense() + y) / (gamma + 1.0)), spec);

    const Eigen::MatrixXd dx = px.x.dense() - x;
    const Eigen::MatrixXd dy = y_next.dense() - y;
    const double stop1 = (dx + gamma * dy).norm();
    const double stop2 = dy.norm();
    const double f = -c * px.logdet + trace_prod(a, px.x);
    const double gap = (px.x.dense() - y_next.dense()).norm();
    const double g = f + 0.5 * gamma * gap * gap;
    const double excess = g + 0.5 * squared_norm(dx) + 0.5 * squared_norm(dy) - g_prev;
    out.max_descent_excess = std::max(out.max_descent_excess, excess);
    ++out.iterations;
    if (config.record_trace) {
      out.trace.push_back({k, out.iterations, gamma, f, g, gap, stop1, stop2, dx.norm()});
    }
    out.x = std::move(px.x);
    out.y = std::move(y_next);
    g_prev = g;
    if (std::max(stop1, stop2) <= tol) {
      out.converged = true;
      break;
    }
    if (out.iterations >= config.l_max) break;
  }
  return out;
}

SymMatrix initial_y(const ConstraintSpec& spec) {
  const std::size_t p = spec.p();
  const std::size_t deg = spec.max_degree();
  const double delta = deg == 0 ? 0.01 : std::min(0.01, 1.0 / (2.0 * static_cast<double>(deg)));
  SymMatrix y = SymMatrix::identity(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j : spec.neighbors(i)) {
      if (i < j) y.set(i, j, delta);
    }
  }
  return y;
}

SolveResult solve_scatter(const SymMatrix& scatter, std::size_t n_samples, const ConstraintSpec& spec,
                          const SolverConfig& config) {
  const std::size_t p = spec.p();
  if (scatter.dim() != p) throw DimensionMismatch("solve: scatter matrix dimension does not match spec");
  config.validate(p, n_samples);
  const double nu = config.nu_for(p);

  SolveResult res;
  res.a = config.scale_b ? posterior_scale(scatter, *config.scale_b) : SymMatrix::identity(p) + scatter;
  res.logdet_coefficient = logdet_coefficient(nu, p, n_samples);

  SymMatrix x = SymMatrix::identity(p);
  SymMatrix y = initial_y(spec);
  res.f_initial = objective_f(x, res.a, nu, p, n_samples);

  double gamma = config.gamma0;
  for (int k = 0; k < config.k_max; ++k) {
    InnerResult inner = inner_loop(x, y, gamma, res.a, spec, config, n_samples, k);
    x = std::move(inner.x);
    y = std::move(inner.y);
    res.inner_all_converged = res.inner_all_converged && inner.converged;
    res.max_descent_excess = std::max(res.max_descent_excess, inner.max_descent_excess);
    const double f = inner.trace.empty() ? objective_f(x, res.a, nu, p, n_samples) : inner.trace.back().f;
    res.outer.push_back({k, gamma, inner.iterations, inner.converged, f, frobenius_distance(x, y)});
    if (config.record_trace) {
      res.trace.records.insert(res.trace.records.end(), inner.trace.begin(), inner.trace.end());
    }
    gamma *= config.eta;
  }
  res.gap = frobenius_distance(x, y);
  res.f_star = objective_f(x, res.a, nu, p, n_samples);
  res.converged = res.gap <= config.gap_tol;
  res.x_star = std::move(x);
  res.y_star = std::move(y);
  return res;
}

SolveResult solve(const Samples& data, const ConstraintSpec& spec, const SolverConfig& config) {
  if (data.p != spec.p()) throw DimensionMismatch("solve: sample length does not match spec");
  return solve_scatter(scatter_matrix(data), data.n, spec, config);
}

LevelBounds level_bounds(double alpha, const SymMatrix& a, double nu, std::size_t p, std::size_t n_samples) {
  if (a.dim() != p) throw DimensionMismatch("level_bounds: A dimension does not match p");
  const double c = logdet_coefficient(nu, p, n_samples);
  if (!(c > 0.0)) throw InvalidArgument("level_bounds: log-det coefficient must be positive");
  LevelBounds lb;
  lb.alpha = alpha;
  lb.sigma_m = min_eig(a);
  if (!(lb.sigma_m > 0.0)) throw InvalidArgument("level_bounds: A must be positive definite");
  const double pc = static_cast<double>(p) * c;
  auto g = [&](double x) { return alpha + pc * std::log(x) - lb.sigma_m * x; };
  double lo = pc / lb.sigma_m;
  if (!(g(lo) > 0.0)) throw InvalidArgument("level_bounds: alpha is not above the infimum of F");
  double hi = 2.0 * lo;
  while (g(hi) >= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw InvalidArgument("level_bounds: no upper root found");
  }
  // Bisect to full precision; stop once the midpoint stops moving.
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) >= 0.0 ? lo : hi) = mid;
  }
  lb.c2 = lo;
  lb.log_c1 = -alpha / c - static_cast<double>(p - 1) * std::log(lb.c2);
  lb.c1 = std::exp(lb.log_c1);
  return lb;
}

ParameterEstimate extract_parameters(const SymMatrix& u, const ConstraintSpec& spec, BetaMode mode) {
  if (u.dim() != spec.p()) throw DimensionMismatch("extract_parameters: matrix dim does not match spec");
  ParameterEstimate est;
  est.mode = mode;
  est.kappa.assign(static_cast<std::size_t>(spec.num_types()), std::numeric_limits<double>::quiet_NaN());
  for (int t = 0; t < spec.num_types(); ++t) {
    const auto& cls = spec.diag_classes()[static_cast<std::size_t>(t)];
    if (cls.empty()) continue;
    const double d = u(cls.front(), cls.front());
    if (!(d > 0.0)) {
      throw InvalidArgument("extract_parameters: type " + spec.label(t) + " has a non-positive diagonal");
    }
    est.kappa[static_cast<std::size_t>(t)] = 1.0 / d;
  }
  for (const auto& cls : spec.offdiag_classes()) {
    if (cls.a > cls.b) continue;
    const auto [i, j] = cls.positions.front();
    double value = 0.0;
    if (mode == BetaMode::raw) {
      value = u(i, j);
    } else {
      // Orientation (a,b) divides by the diagonal of i, (b,a) by that of j.
      value = 0.5 * (-u(i, j) / u(i, i) - u(j, i) / u(j, j));
    }
    est.beta[TypePair(cls.a, cls.b)] = value;
  }
  return est;
}

}  // namespace cargo
