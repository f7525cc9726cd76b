#include <doctest.h>

#include <cmath>

#include "cargo/glasso.hpp"
#include "oracles.hpp"

using namespace cargo;

namespace {

SymMatrix used_s(const SymMatrix& s, const GlassoResult& r) { return s + SymMatrix::identity(s.dim()) * r.ridge; }

}  // namespace

TEST_CASE("diagonal S gives the closed form") {
  const std::array<double, 3> d{0.5, 2.0, 1.0};
  const auto s = SymMatrix::diagonal(d);
  GlassoConfig cfg;
  cfg.lambda = 0.3;
  cfg.ridge_scale = 0.0;
  const auto r = glasso(s, cfg);
  CHECK(r.converged);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.x(i, i) == doctest::Approx(1.0 / (d[i] + 0.3)).epsilon(1e-10));
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) CHECK(r.x(i, j) == 0.0);
    }
  }
}

TEST_CASE("a huge penalty shrinks to the diagonal") {
  oracle::Rng rng(1);
  const auto s = SymMatrix::symmetrized(oracle::random_pd(5, rng));
  GlassoConfig cfg;
  cfg.lambda = 100.0;
  const auto r = glasso(s, cfg);
  CHECK(count_nnz(r.x) == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(r.x(i, i) == doctest::Approx(1.0 / (s(i, i) + r.ridge + 100.0)));
}

TEST_CASE("objective matches the proximal-gradient oracle on small problems") {
  oracle::Rng rng(2);
  for (int rep = 0; rep < 12; ++rep) {
    const int p = 2 + rep % 5;
    const auto s = SymMatrix::symmetrized(oracle::random_pd(p, rng, 0.3, 3.0));
    GlassoConfig cfg;
    cfg.lambda = rep < 4 ? 0.1 : 0.05 * (rep % 4 + 1);
    const auto r = glasso(s, cfg);
    REQUIRE(r.converged);
    const auto ref = oracle::glasso_proximal_gradient(used_s(s, r).dense(), cfg.lambda);
    CHECK(std::abs(r.objective - ref.objective) <= 1e-6);
    CHECK(r.objective == doctest::Approx(oracle::glasso_objective_naive(r.x.dense(), used_s(s, r).dense(), cfg.lambda)));
    CHECK(r.kkt.pass);
    CHECK(glasso_kkt(r.x, used_s(s, r), cfg.lambda, cfg.kkt_tol).pass);
  }
}

TEST_CASE("KKT certificate, monotone objective and positive definiteness on single-sample S") {
  oracle::Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const int p = 20;
    const auto x = sample_gaussian(SymMatrix::symmetrized(oracle::random_pd(p, rng, 1.0, 4.0)), 1, 50 + rep);
    const auto s = scatter_matrix(x);
    GlassoConfig cfg;
    cfg.lambda = 0.02 + 0.02 * rep;
    const auto r = glasso(s, cfg);
    CHECK(is_positive_definite(r.x));
    for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
      CHECK(r.objective_trace[k] <= r.objective_trace[k - 1] + 1e-9);
    }
    if (r.converged) {
      CHECK(r.kkt.pass);
      // Diagonal convention: W_ii = S_ii + lambda.
      const auto w = inverse_pd(r.x);
      for (std::size_t i = 0; i < static_cast<std::size_t>(p); ++i) {
        CHECK(std::abs(w(i, i) - (s(i, i) + r.ridge + cfg.lambda)) <= cfg.kkt_tol);
      }
    }
  }
}

TEST_CASE("warm starts reach the same optimum") {
  oracle::Rng rng(4);
  const auto s = SymMatrix::symmetrized(oracle::random_pd(8, rng, 0.3, 2.0));
  GlassoConfig cfg;
  cfg.lambda = 0.05;
  const auto cold = glasso(s, cfg);
  cfg.lambda = 0.2;
  const auto other = glasso(s, cfg);
  cfg.lambda = 0.05;
  const auto warm = glasso(s, cfg, &other.x);
  CHECK(std::abs(cold.objective - warm.objective) <= 1e-9);
}

TEST_CASE("nnz is nonincreasing in lambda") {
  oracle::Rng rng(5);
  const auto s = scatter_matrix(sample_gaussian(SymMatrix::symmetrized(oracle::random_pd(15, rng)), 30, 8));
  GlassoConfig cfg;
  std::size_t prev = 15 * 15 + 1;
  for (double lambda = 0.5; lambda <= 40.0; lambda *= 1.5) {
    cfg.lambda = lambda;
    const std::size_t nnz = count_nnz(glasso(s, cfg).x);
    CHECK(nnz <= prev);
    prev = nnz;
  }
  CHECK(prev == 15);
}

TEST_CASE("lambda tuning on the simulation design") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto truth = generate_simulation_truth(20, 0.10, seed);
    const auto x = sample_gaussian(truth.precision, 1, seed + 100);
    const auto s = scatter_matrix(center_by_type(x, truth.spec.types(), truth.spec.num_types()).samples);
    GlassoConfig cfg;
    cfg.max_sweeps = 300;
    cfg.stop_tol = cfg.kkt_tol;
    for (std::size_t target : {truth.offdiag_nnz + 20, std::size_t{210}}) {
      const auto t = tune_lambda_to_sparsity(s, target, cfg);
      CHECK(t.steps <= 40);
      CHECK(t.nnz == count_nnz(t.fit.x));
      if (!t.warning) {
        CHECK(t.reached);
      }
      MESSAGE("seed " << seed << " target " << target << ": lambda " << t.lambda << " nnz " << t.nnz << " steps "
                      << t.steps << std::string(t.warning ? " (warning)" : ""));
    }
    const auto diag = tune_lambda_to_sparsity(s, 20, cfg);
    CHECK(diag.nnz == 20);
    CHECK(diag.reached);
  }
  CHECK_THROWS_AS(tune_lambda_to_sparsity(SymMatrix::identity(3), 2, GlassoConfig{}), InvalidArgument);
}

TEST_CASE("an unreachable target is reported with a warning") {
  // Independent coordinates: off-diagonal S entries are tiny, so reaching a
  // dense fit needs lambda far below the search floor.
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(6, 6);
  m(0, 1) = m(1, 0) = 1e-3;
  const auto t = tune_lambda_to_sparsity(SymMatrix::symmetrized(m), 36, GlassoConfig{}, 40, 0.5);
  CHECK(t.warning);
  CHECK_FALSE(t.reached);
}

TEST_CASE("class means of glasso output") {
  oracle::Rng rng(6);
  const auto spec = build_spec_from_adjacency(oracle::random_types(8, 3, rng), oracle::random_adjacency(8, 0.5, rng));
  for (const auto& [k, v] : glasso_mse_extract(SymMatrix::identity(8), spec)) CHECK(v == 0.0);
  std::map<TypePair, double> beta;
  for (int a = 0; a < spec.num_types(); ++a) {
    for (int b = a; b < spec.num_types(); ++b) beta[TypePair(a, b)] = 0.01 * (a + 1) * (b + 2);
  }
  const auto x = assemble_precision(CarParameters::homogeneous(1.0, beta), spec);
  for (const auto& [k, v] : glasso_mse_extract(x, spec)) CHECK(v == doctest::Approx(-beta.at(k)));
  const auto z = SymMatrix::symmetrized(oracle::random_symmetric(8, rng));
  const auto got = glasso_mse_extract(z, spec);
  const auto ref = oracle::class_means_naive(z.dense(), spec);
  CHECK(got.size() == ref.size());
  for (const auto& [k, v] : ref) CHECK(got.at(k) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("configuration is validated") {
  GlassoConfig cfg;
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(glasso(SymMatrix::identity(2), cfg), InvalidArgument);
  cfg = GlassoConfig{};
  cfg.max_sweeps = 0;
  CHECK_THROWS_AS(glasso(SymMatrix::identity(2), cfg), InvalidArgument);
}
