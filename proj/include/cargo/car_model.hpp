#pragma once

// CAR parameterization of structured precision matrices, synthetic data and
// the simulation ground truth.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cargo/lattice.hpp"

namespace cargo {

// Unordered type pair, stored with first <= second.
struct TypePair {
  int first = 0;
  int second = 0;

  TypePair() = default;
  TypePair(int a, int b) : first(a < b ? a : b), second(a < b ? b : a) {}
  auto operator<=>(const TypePair&) const = default;
};

// Conditional variances kappa (one per type, or one shared value) and
// coupling coefficients beta per unordered type pair.
struct CarParameters {
  std::vector<double> kappa;
  std::map<TypePair, double> beta;

  static CarParameters homogeneous(double kappa, std::map<TypePair, double> beta);
  double kappa_of(int type) const;
  bool is_homogeneous() const;
};

// CAR entries: 1/kappa on the diagonal, -beta/kappa on allowed
// positions. Type-dependent kappa makes the two orientations differ; the
// stored value is their mean. Positive definiteness is not checked.
SymMatrix assemble_precision(const CarParameters& params, const ConstraintSpec& spec);

struct MembershipReport {
  bool member = true;
  std::vector<std::string> violations;
};

// Zeros off the graph, class-constant entries and a positive diagonal,
// all to within `tol`.
MembershipReport check_membership(const SymMatrix& x, const ConstraintSpec& spec, double tol);

// Row-major n x p sample block.
struct Samples {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> values;

  double operator()(std::size_t row, std::size_t col) const { return values[row * p + col]; }
  double& operator()(std::size_t row, std::size_t col) { return values[row * p + col]; }
};

// n draws from N(0, precision^{-1}) via L^T z = w with precision = L L^T.
Samples sample_gaussian(const SymMatrix& precision, std::size_t n, std::uint64_t seed);

struct CenteredSamples {
  Samples samples;
  // type_means[row][type]
  std::vector<std::vector<double>> type_means;
};

// Subtracts, within each sample, the mean over the nodes of each type.
CenteredSamples center_by_type(const Samples& samples, const std::vector<int>& types, int num_types);

// S = sum_n x_n x_n^T.
SymMatrix scatter_matrix(const Samples& samples);

// The six coupling values of the three-type simulation design.
std::map<TypePair, double> simulation_beta();

struct SimulationTruth {
  ConstraintSpec spec;
  SymMatrix precision;
  std::vector<int> types;  // values in {1, 2, 3}
  std::map<TypePair, double> beta;  // keyed by dense type index of `spec`
  std::size_t offdiag_nnz = 0;
  double diagonal = 0.0;
};

// Random three-type design: ceil(density * p^2) off-diagonal nonzeros
// (mirrors counted), each set directly to the table value for its type pair,
// diagonal 1/kappa with kappa = 0.25 raised in steps of 0.05 until the
// smallest eigenvalue is at least 0.01.
SimulationTruth generate_simulation_truth(std::size_t p, double density, std::uint64_t seed);

// Regression fixture: {"types": [...], "adjacency_nnz": [[i,j],...],
// "precision": "file.csv", "beta_table": {"1-2": v, ...}}. Indices are
// 0-based and the precision path is relative to the fixture file.
struct TrueModelFixture {
  std::vector<int> types;
  std::vector<std::pair<std::size_t, std::size_t>> adjacency_nnz;
  SymMatrix precision;
  std::map<std::string, double> beta_table;
};

void write_true_model(const SimulationTruth& truth, const std::filesystem::path& json_path);
TrueModelFixture read_true_model(const std::filesystem::path& json_path);

}  // namespace cargo
