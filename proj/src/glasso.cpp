#include "cargo/glasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cargo {

namespace {

double soft(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// min 1/2 b^T Q b + c^T b + lambda |b|_1 by cyclic coordinate descent,
// starting from b. Returns false if max_inner passes did not settle.
bool lasso_cd(const Eigen::MatrixXd& q, const Eigen::VectorXd& c, double lambda, Eigen::VectorXd& b,
              double tol, int max_inner) {
  Eigen::VectorXd qb = q * b;
  for (int pass = 0; pass < max_inner; ++pass) {
    double delta = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const double partial = c(j) + qb(j) - q(j, j) * b(j);
      const double next = -soft(partial, lambda) / q(j, j);
      const double d = next - b(j);
      if (d != 0.0) {
        qb += d * q.col(j);
        b(j) = next;
        delta = std::max(delta, std::abs(d));
      }
    }
    if (delta <= tol) return true;
  }
  return false;
}

}  // namespace

void GlassoConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("glasso: lambda must be positive");
  if (max_sweeps < 1) throw InvalidArgument("glasso: max_sweeps must be at least 1");
  if (max_inner < 1) throw InvalidArgument("glasso: max_inner must be at least 1");
  if (!(kkt_tol > 0.0) || !(inner_tol > 0.0) || !(sweep_tol > 0.0) || !(stop_tol > 0.0)) {
    throw InvalidArgument("glasso: tolerances must be positive");
  }
  if (!(ridge_scale >= 0.0)) throw InvalidArgument("glasso: ridge_scale must be nonnegative");
}

double glasso_objective(const SymMatrix& x, const SymMatrix& s, double lambda) {
  require_same_dim(x, s, "glasso_objective");
  return -logdet_pd(x) + trace_prod(s, x) + lambda * x.dense().cwiseAbs().sum();
}

KktReport glasso_kkt(const SymMatrix& x, const SymMatrix& s, double lambda, double tol) {
  require_same_dim(x, s, "glasso_kkt");
  const Eigen::MatrixXd w = inverse_pd(x).dense();
  const auto& xs = x.dense();
  const auto& sd = s.dense();
  KktReport rep;
  for (Eigen::Index j = 0; j < xs.cols(); ++j) {
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      const double g = w(i, j) - sd(i, j);
      double v = 0.0;
      if (xs(i, j) == 0.0) {
        v = std::max(0.0, std::abs(g) - lambda);
      } else {
        v = std::abs(g - lambda * (xs(i, j) > 0.0 ? 1.0 : -1.0));
      }
      rep.max_violation = std::max(rep.max_violation, v);
    }
  }
  rep.pass = rep.max_violation <= tol;
  return rep;
}

GlassoResult glasso(const SymMatrix& s_in, const GlassoConfig& config, const SymMatrix* warm) {
  config.validate();
  const std::size_t p = s_in.dim();
  if (p == 0) throw InvalidArgument("glasso: empty matrix");
  const auto n = static_cast<Eigen::Index>(p);
  GlassoResult res;
  res.lambda = config.lambda;
  res.ridge = config.ridge_scale * s_in.dense().trace() / static_cast<double>(p);
  const SymMatrix s = s_in + SymMatrix::identity(p) * res.ridge;
  const Eigen::MatrixXd& sd = s.dense();
  if (sd.diagonal().minCoeff() + config.lambda <= 0.0) {
    throw InvalidArgument("glasso: S_ii + lambda must be positive");
  }
  const double lambda = config.lambda;

  Eigen::MatrixXd x;
  Eigen::MatrixXd w;
  if (warm) {
    if (warm->dim() != p) throw DimensionMismatch("glasso: warm start has the wrong dimension");
    x = warm->dense();
    w = inverse_pd(*warm).dense();
  } else {
    x = (sd.diagonal().array() + lambda).inverse().matrix().asDiagonal();
    w = (sd.diagonal().array() + lambda).matrix().asDiagonal();
  }
  res.objective_trace.push_back(glasso_objective(SymMatrix::symmetrized(x), s, lambda));

  std::vector<Eigen::Index> others(static_cast<std::size_t>(n - 1));
  for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
    double change = 0.0;
    bool inner_ok = true;
    for (Eigen::Index j = 0; j < n; ++j) {
      std::iota(others.begin(), others.begin() + j, Eigen::Index{0});
      std::iota(others.begin() + j, others.end(), j + 1);
      const Eigen::VectorXd w12 = w(others, j);
      // Inverse of X11 from the current W.
      const Eigen::MatrixXd u = w(others, others) - w12 * w12.transpose() / w(j, j);
      const double s22 = sd(j, j) + lambda;
      const Eigen::MatrixXd q = s22 * u;
      const Eigen::VectorXd c = sd(others, j);
      Eigen::VectorXd b = x(others, j);
      if (n > 1) inner_ok = lasso_cd(q, c, lambda, b, config.inner_tol, config.max_inner) && inner_ok;
      const double t = 1.0 / s22;
      const Eigen::VectorXd ub = u * b;
      const double x22 = t + b.dot(ub);
      change = std::max(change, std::abs(x22 - x(j, j)));
      if (n > 1) change = std::max(change, (b - x(others, j)).cwiseAbs().maxCoeff());
      x(others, j) = b;
      x(j, others) = b.transpose();
      x(j, j) = x22;
      w(others, others) = u + ub * ub.transpose() / t;
      const Eigen::VectorXd w12n = -ub / t;
      w(others, j) = w12n;
      w(j, others) = w12n.transpose();
      w(j, j) = 1.0 / t;
    }
    res.sweeps = sweep + 1;
    res.objective_trace.push_back(glasso_objective(SymMatrix::symmetrized(x), s, lambda));
    if (!inner_ok) continue;
    res.kkt = glasso_kkt(SymMatrix::symmetrized(x), s, lambda, config.kkt_tol);
    if (res.kkt.pass && (res.kkt.max_violation <= config.stop_tol ||
                         change <= config.sweep_tol * (1.0 + x.cwiseAbs().maxCoeff()))) {
      res.converged = true;
      break;
    }
  }
  res.x = SymMatrix::symmetrized(x);
  if (!res.converged) res.kkt = glasso_kkt(res.x, s, lambda, config.kkt_tol);
  res.objective = res.objective_trace.back();
  return res;
}

std::size_t count_nnz(const SymMatrix& x, double threshold) {
  return static_cast<std::size_t>((x.dense().array().abs() > threshold).count());
}

LambdaTuning tune_lambda_to_sparsity(const SymMatrix& s, std::size_t target, const GlassoConfig& base,
                                     int max_steps, double min_lambda_ratio) {
  const std::size_t p = s.dim();
  if (target < p || target > p * p) throw InvalidArgument("tune_lambda: target must lie in [p, p^2]");
  if (!(min_lambda_ratio > 0.0 && min_lambda_ratio < 1.0)) {
    throw InvalidArgument("tune_lambda: min_lambda_ratio must lie in (0, 1)");
  }
  // Above lambda_max every off-diagonal entry is zero.
  double lambda_max = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) lambda_max = std::max(lambda_max, std::abs(s(i, j)));
  }
  LambdaTuning best;
  best.target = target;
  auto consider = [&](double lambda, GlassoResult fit) {
    const std::size_t nnz = count_nnz(fit.x);
    const auto dist = [&](std::size_t v) { return v > target ? v - target : target - v; };
    if (best.fit.x.dim() == 0 || dist(nnz) < dist(best.nnz) ||
        (dist(nnz) == dist(best.nnz) && lambda > best.lambda)) {
      best.lambda = lambda;
      best.nnz = nnz;
      best.fit = std::move(fit);
    }
    return nnz;
  };
  GlassoConfig cfg = base;
  auto fit_at = [&](double lambda, const SymMatrix* warm) {
    cfg.lambda = lambda;
    return glasso(s, cfg, warm);
  };

  double hi = lambda_max > 0.0 ? lambda_max * 1.01 : 1.0;
  consider(hi, fit_at(hi, nullptr));
  if (best.nnz <= target && target == p) {
    best.reached = best.nnz == target;
    return best;
  }
  // Walk down until the fit is dense enough.
  double lo = hi;
  std::size_t lo_nnz = best.nnz;
  SymMatrix warm = best.fit.x;
  // Small lambda makes the single-sample problem badly conditioned, so step
  // down gently and stop at the first fit that is dense enough.
  const double lambda_floor = hi * min_lambda_ratio;
  while (lo_nnz < target && lo / 2.0 >= lambda_floor) {
    hi = lo;
    lo /= 2.0;
    GlassoResult fit = fit_at(lo, &warm);
    warm = fit.x;
    lo_nnz = consider(lo, std::move(fit));
  }
  if (lo_nnz < target) {
    best.warning = true;
    return best;
  }
  for (int step = 0; step < max_steps && best.nnz != target; ++step) {
    const double mid = std::sqrt(lo * hi);
    GlassoResult fit = fit_at(mid, &warm);
    warm = fit.x;
    const std::size_t nnz = consider(mid, std::move(fit));
    best.steps = step + 1;
    (nnz > target ? lo : hi) = mid;
  }
  best.reached = best.nnz == target;
  return best;
}

std::map<TypePair, double> glasso_mse_extract(const SymMatrix& x, const ConstraintSpec& spec) {
  if (x.dim() != spec.p()) throw DimensionMismatch("glasso_mse_extract: dimension does not match spec");
  std::map<TypePair, double> out;
  for (const auto& cls : spec.offdiag_classes()) {
    if (cls.a > cls.b) continue;
    double sum = 0.0;
    for (auto [i, j] : cls.positions) sum += x(i, j);
    out[TypePair(cls.a, cls.b)] = sum / static_cast<double>(cls.positions.size());
  }
  return out;
}

}  // namespace cargo
