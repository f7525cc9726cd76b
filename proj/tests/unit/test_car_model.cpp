#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "cargo/car_model.hpp"
#include "oracles.hpp"

using namespace cargo;

namespace {

ConstraintSpec random_spec(int p, int types, double prob, oracle::Rng& rng) {
  return build_spec_from_adjacency(oracle::random_types(p, types, rng), oracle::random_adjacency(p, prob, rng));
}

std::map<TypePair, double> all_pairs(int t, double v) {
  std::map<TypePair, double> b;
  for (int a = 0; a < t; ++a) {
    for (int c = a; c < t; ++c) b[TypePair(a, c)] = v;
  }
  return b;
}

}  // namespace

TEST_CASE("assemble_precision on hand cases") {
  std::vector<Atom> atoms{{1, "A", {0, 0, 0}, std::nullopt}, {2, "A", {0.5, 0, 0}, std::nullopt}};
  const auto spec = build_neighbors(Supercell({1, 1, 1}, atoms), NeighborPolicy::first_shell());
  const auto zero = assemble_precision(CarParameters::homogeneous(1.0, {{TypePair(0, 0), 0.0}}), spec);
  CHECK(zero == SymMatrix::identity(2));
  const auto m = assemble_precision(CarParameters::homogeneous(0.25, {{TypePair(0, 0), 0.05}}), spec);
  CHECK(m(0, 0) == doctest::Approx(4.0));
  CHECK(m(0, 1) == doctest::Approx(-0.2));
  CHECK(m(1, 0) == m(0, 1));
  CHECK_THROWS_AS(assemble_precision(CarParameters::homogeneous(1.0, {}), spec), InvalidArgument);
}

TEST_CASE("assembled precisions are members of N") {
  oracle::Rng rng(2);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  std::uniform_real_distribution<double> k(0.2, 2.0);
  for (int rep = 0; rep < 40; ++rep) {
    const auto spec = random_spec(6 + rep % 5, 3, 0.5, rng);
    CarParameters params;
    for (int t = 0; t < spec.num_types(); ++t) params.kappa.push_back(k(rng));
    for (int a = 0; a < spec.num_types(); ++a) {
      for (int b = a; b < spec.num_types(); ++b) params.beta[TypePair(a, b)] = u(rng);
    }
    const auto x = assemble_precision(params, spec);
    const auto report = check_membership(x, spec, 1e-12);
    CHECK(report.member);
  }
}

TEST_CASE("membership reports a corrupted class") {
  oracle::Rng rng(3);
  const auto spec = random_spec(8, 2, 0.6, rng);
  CHECK(check_membership(SymMatrix::identity(8), spec, 1e-12).member);
  auto x = assemble_precision(CarParameters::homogeneous(0.5, all_pairs(spec.num_types(), 0.1)), spec);
  REQUIRE_FALSE(spec.offdiag_classes().empty());
  const auto& cls = spec.offdiag_classes().front();
  REQUIRE(cls.positions.size() >= 1);
  x.add(cls.positions.front().first, cls.positions.front().second, 0.01);
  const auto report = check_membership(x, spec, 1e-12);
  CHECK_FALSE(report.member);
  CHECK_FALSE(report.violations.empty());

  SymMatrix off = SymMatrix::identity(8);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = i + 1; j < 8; ++j) {
      if (!spec.is_neighbor(i, j)) {
        off.set(i, j, 0.5);
        CHECK_FALSE(check_membership(off, spec, 1e-12).member);
        return;
      }
    }
  }
}

TEST_CASE("homogeneous parameters round trip through the precision") {
  oracle::Rng rng(4);
  const auto spec = random_spec(10, 3, 0.4, rng);
  std::map<TypePair, double> beta;
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int a = 0; a < spec.num_types(); ++a) {
    for (int b = a; b < spec.num_types(); ++b) beta[TypePair(a, b)] = u(rng);
  }
  const double kappa = 0.7;
  const auto x = assemble_precision(CarParameters::homogeneous(kappa, beta), spec);
  for (std::size_t i = 0; i < spec.p(); ++i) {
    CHECK(std::abs(1.0 / x(i, i) - kappa) <= 1e-12);
    for (std::size_t j : spec.neighbors(i)) {
      CHECK(std::abs(-x(i, j) / x(i, i) - beta.at(TypePair(spec.type_of(i), spec.type_of(j)))) <= 1e-12);
    }
  }
}

TEST_CASE("type-dependent kappa is symmetrized by the mean of the two orientations") {
  const std::vector<int> types{0, 1};
  Eigen::MatrixXi adj(2, 2);
  adj << 0, 1, 1, 0;
  const auto spec = build_spec_from_adjacency(types, adj);
  CarParameters params;
  params.kappa = {0.5, 2.0};
  params.beta[TypePair(0, 1)] = 0.2;
  params.beta[TypePair(0, 0)] = 0.0;
  params.beta[TypePair(1, 1)] = 0.0;
  const auto x = assemble_precision(params, spec);
  CHECK(x(0, 1) == doctest::Approx(0.5 * (-0.2 / 0.5 - 0.2 / 2.0)));
}

TEST_CASE("sampling is deterministic and matches the covariance") {
  const auto a = sample_gaussian(SymMatrix::identity(3), 5, 42);
  const auto b = sample_gaussian(SymMatrix::identity(3), 5, 42);
  CHECK(a.values == b.values);
  const auto c = sample_gaussian(SymMatrix::identity(3), 5, 43);
  CHECK(a.values != c.values);

  const std::size_t n = 100000;
  const auto id = sample_gaussian(SymMatrix::identity(3), n, 7);
  const auto s = scatter_matrix(id);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::abs(s(i, j) / n - (i == j ? 1.0 : 0.0)) <= 5.0 / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST_CASE("Monte Carlo precision recovery on a 3x3 fixture") {
  Eigen::MatrixXd q(3, 3);
  q << 2.0, -0.6, 0.3, -0.6, 1.5, -0.4, 0.3, -0.4, 1.0;
  const auto prec = SymMatrix::symmetrized(q);
  const std::size_t n = 100000;
  const auto draws = sample_gaussian(prec, n, 2024);
  const Eigen::MatrixXd cov = scatter_matrix(draws).dense() / static_cast<double>(n);
  const Eigen::MatrixXd emp = cov.inverse();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(std::abs(emp(i, j) - q(i, j)) <= 0.05 * std::abs(q(i, j)));
  }
  Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(sample_gaussian(SymMatrix::symmetrized(indefinite), 2, 1), NotPositiveDefinite);
}

TEST_CASE("centering by type") {
  Samples s{1, 3, {1.0, 2.0, 3.0}};
  const auto c = center_by_type(s, {0, 0, 0}, 1);
  CHECK(c.samples.values == std::vector<double>{-1.0, 0.0, 1.0});
  CHECK(c.type_means[0][0] == 2.0);

  const auto again = center_by_type(c.samples, {0, 0, 0}, 1);
  CHECK(again.samples.values == c.samples.values);

  oracle::Rng rng(6);
  std::normal_distribution<double> n(1.0, 2.0);
  std::vector<int> types;
  for (int t = 0; t < 4; ++t) {
    for (int k = 0; k < 6; ++k) types.push_back((t + k) % 4);
  }
  Samples h{3, 24, std::vector<double>(72)};
  for (auto& v : h.values) v = n(rng);
  const auto hc = center_by_type(h, types, 4);
  for (std::size_t row = 0; row < 3; ++row) {
    for (int t = 0; t < 4; ++t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 24; ++i) {
        if (types[i] == t) sum += hc.samples(row, i);
      }
      CHECK(std::abs(sum) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(center_by_type(s, {0, 0, 0}, 2), InvalidArgument);
}

TEST_CASE("simulation truth") {
  const auto beta = simulation_beta();
  CHECK(beta.at(TypePair(1, 1)) == 0.05);
  CHECK(beta.at(TypePair(2, 2)) == 0.10);
  CHECK(beta.at(TypePair(3, 3)) == -0.10);
  CHECK(beta.at(TypePair(1, 2)) == 0.105);
  CHECK(beta.at(TypePair(1, 3)) == -0.0625);
  CHECK(beta.at(TypePair(2, 3)) == -0.125);

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (std::size_t p : {20u, 50u, 100u}) {
      const auto t = generate_simulation_truth(p, 0.10, seed);
      CHECK(t.offdiag_nnz == 2 * static_cast<std::size_t>(std::ceil(0.10 * p * p) / 2));
      CHECK(min_eig(t.precision) >= 0.01);
      std::size_t nnz = 0;
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
          CHECK(t.precision(i, j) == t.precision(j, i));
          if (i != j && t.precision(i, j) != 0.0) {
            ++nnz;
            CHECK(t.spec.is_neighbor(i, j));
            CHECK(t.precision(i, j) == beta.at(TypePair(t.types[i], t.types[j])));
          }
        }
      }
      CHECK(nnz == t.offdiag_nnz);
    }
  }
  const auto sparse = generate_simulation_truth(20, 1e-6, 3);
  CHECK(sparse.offdiag_nnz == 0);
  CHECK(sparse.precision == SymMatrix::identity(20) * 4.0);
  const auto again = generate_simulation_truth(20, 0.1, 5);
  CHECK(again.precision == generate_simulation_truth(20, 0.1, 5).precision);
  CHECK_THROWS_AS(generate_simulation_truth(5, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(generate_simulation_truth(20, 0.6, 1), InvalidArgument);
}

TEST_CASE("true-model fixture round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "cargo_truth_io";
  std::filesystem::create_directories(dir);
  const auto t = generate_simulation_truth(12, 0.2, 9);
  write_true_model(t, dir / "truth.json");
  const auto back = read_true_model(dir / "truth.json");
  CHECK(back.types == t.types);
  CHECK(back.precision == t.precision);
  CHECK(back.adjacency_nnz.size() * 2 == t.offdiag_nnz);
  CHECK(back.beta_table.size() == 6);
}
