#include "cargo/car_model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace cargo {

CarParameters CarParameters::homogeneous(double kappa, std::map<TypePair, double> beta) {
  CarParameters out;
  out.kappa = {kappa};
  out.beta = std::move(beta);
  return out;
}

double CarParameters::kappa_of(int type) const {
  if (kappa.empty()) throw InvalidArgument("CarParameters: no kappa values");
  if (kappa.size() == 1) return kappa.front();
  if (type < 0 || static_cast<std::size_t>(type) >= kappa.size()) {
    throw InvalidArgument("CarParameters: no kappa for type " + std::to_string(type));
  }
  return kappa[static_cast<std::size_t>(type)];
}

bool CarParameters::is_homogeneous() const {
  return std::adjacent_find(kappa.begin(), kappa.end(), std::not_equal_to<>()) == kappa.end();
}

SymMatrix assemble_precision(const CarParameters& params, const ConstraintSpec& spec) {
  for (double k : params.kappa) {
    if (!(k > 0.0)) throw InvalidArgument("kappa must be positive");
  }
  if (params.kappa.size() != 1 && params.kappa.size() != static_cast<std::size_t>(spec.num_types())) {
    throw DimensionMismatch("kappa must have one entry or one per type");
  }
  const std::size_t p = spec.p();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0 / params.kappa_of(spec.type_of(i));
  }
  for (std::size_t i = 0; i < p; ++i) {
    const int a = spec.type_of(i);
    for (std::size_t j : spec.neighbors(i)) {
      const int b = spec.type_of(j);
      const auto it = params.beta.find(TypePair(a, b));
      if (it == params.beta.end()) {
        throw InvalidArgument("missing beta for type pair " + spec.pair_label(a, b));
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -it->second / params.kappa_of(a);
    }
  }
  // With homogeneous kappa the two orientations already agree exactly.
  return SymMatrix::symmetrized(m);
}

MembershipReport check_membership(const SymMatrix& x, const ConstraintSpec& spec, double tol) {
  MembershipReport report;
  if (x.dim() != spec.p()) {
    report.member = false;
    report.violations.push_back("dimension mismatch");
    return report;
  }
  const std::size_t p = spec.p();
  for (std::size_t i = 0; i < p; ++i) {
    if (!(x(i, i) > 0.0)) {
      std::ostringstream os;
      os << "diagonal entry (" << i << "," << i << ") = " << x(i, i) << " is not positive";
      report.violations.push_back(os.str());
    }
    for (std::size_t j = 0; j < p; ++j) {
      if (i != j && !spec.is_neighbor(i, j) && std::abs(x(i, j)) > tol) {
        std::ostringstream os;
        os << "disallowed position (" << i << "," << j << ") = " << x(i, j);
        report.violations.push_back(os.str());
      }
    }
  }
  for (std::size_t t = 0; t < spec.diag_classes().size(); ++t) {
    const auto& cls = spec.diag_classes()[t];
    if (cls.empty()) continue;
    double lo = x(cls[0], cls[0]);
    double hi = lo;
    for (std::size_t i : cls) {
      lo = std::min(lo, x(i, i));
      hi = std::max(hi, x(i, i));
    }
    if (hi - lo > tol) {
      std::ostringstream os;
      os << "diag class " << spec.label(static_cast<int>(t)) << " spread " << hi - lo;
      report.violations.push_back(os.str());
    }
  }
  for (const auto& cls : spec.offdiag_classes()) {
    double lo = x(cls.positions[0].first, cls.positions[0].second);
    double hi = lo;
    for (auto [i, j] : cls.positions) {
      lo = std::min(lo, x(i, j));
      hi = std::max(hi, x(i, j));
    }
    if (hi - lo > tol) {
      std::ostringstream os;
      os << "offdiag class (" << spec.label(cls.a) << "," << spec.label(cls.b) << ") spread " << hi - lo;
      report.violations.push_back(os.str());
    }
  }
  report.member = report.violations.empty();
  return report;
}

Samples sample_gaussian(const SymMatrix& precision, std::size_t n, std::uint64_t seed) {
  const Eigen::MatrixXd l = cholesky_lower(precision);
  const std::size_t p = precision.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Samples out{n, p, std::vector<double>(n * p)};
  Eigen::VectorXd w(static_cast<Eigen::Index>(p));
  for (std::size_t r = 0; r < n; ++r) {
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = normal(rng);
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(w);
    for (std::size_t k = 0; k < p; ++k) out(r, k) = w(static_cast<Eigen::Index>(k));
  }
  return out;
}

CenteredSamples center_by_type(const Samples& samples, const std::vector<int>& types, int num_types) {
  if (types.size() != samples.p) throw DimensionMismatch("type vector length does not match sample length");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_types), 0);
  for (int t : types) {
    if (t < 0 || t >= num_types) throw InvalidArgument("type index out of range");
    ++counts[static_cast<std::size_t>(t)];
  }
  for (int t = 0; t < num_types; ++t) {
    if (counts[static_cast<std::size_t>(t)] == 0) {
      throw InvalidArgument("type " + std::to_string(t) + " has no nodes; cannot center");
    }
  }
  CenteredSamples out{samples, {}};
  out.type_means.assign(samples.n, std::vector<double>(static_cast<std::size_t>(num_types), 0.0));
  for (std::size_t r = 0; r < samples.n; ++r) {
    auto& means = out.type_means[r];
    for (std::size_t k = 0; k < samples.p; ++k) means[static_cast<std::size_t>(types[k])] += samples(r, k);
    for (int t = 0; t < num_types; ++t) means[static_cast<std::size_t>(t)] /= static_cast<double>(counts[static_cast<std::size_t>(t)]);
    for (std::size_t k = 0; k < samples.p; ++k) out.samples(r, k) -= means[static_cast<std::size_t>(types[k])];
  }
  return out;
}

SymMatrix scatter_matrix(const Samples& samples) {
  const auto p = static_cast<Eigen::Index>(samples.p);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t r = 0; r < samples.n; ++r) {
    const Eigen::Map<const Eigen::VectorXd> x(samples.values.data() + r * samples.p, p);
    s.noalias() += x * x.transpose();
  }
  return SymMatrix::symmetrized(s);
}

std::map<TypePair, double> simulation_beta() {
  // Keys are the design's type labels 1, 2, 3.
  return {
      {TypePair(1, 1), 0.0500},  {TypePair(2, 2), 0.1000},  {TypePair(3, 3), -0.1000},
      {TypePair(1, 2), 0.1050},  {TypePair(1, 3), -0.0625}, {TypePair(2, 3), -0.1250},
  };
}

SimulationTruth generate_simulation_truth(std::size_t p, double density, std::uint64_t seed) {
  if (p < 6) throw InvalidArgument("simulation design needs p >= 6");
  if (!(density > 0.0 && density < 0.5)) throw InvalidArgument("density must lie in (0, 0.5)");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> type_dist(1, 3);
  std::vector<int> types(p);
  for (auto& t : types) t = type_dist(rng);

  const auto target = static_cast<std::size_t>(std::ceil(density * static_cast<double>(p * p)));
  const std::size_t pairs = target / 2;
  std::vector<std::pair<std::size_t, std::size_t>> all;
  all.reserve(p * (p - 1) / 2);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) all.emplace_back(i, j);
  }
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(pairs, all.size()));

  const auto table = simulation_beta();
  const auto n = static_cast<Eigen::Index>(p);
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(n, n);
  Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(n, n);
  for (auto [i, j] : all) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    adjacency(ii, jj) = adjacency(jj, ii) = 1;
    prec(ii, jj) = prec(jj, ii) = table.at(TypePair(types[i], types[j]));
  }
  const double kappa = 0.25;
  double diag = 1.0 / kappa;
  prec.diagonal().setConstant(diag);
  while (min_eig(SymMatrix::symmetrized(prec)) < 0.01) {
    diag += 0.05;
    prec.diagonal().setConstant(diag);
  }

  ConstraintSpec spec = build_spec_from_adjacency(types, adjacency);
  std::map<TypePair, double> beta;
  for (int a = 0; a < spec.num_types(); ++a) {
    for (int b = a; b < spec.num_types(); ++b) {
      const int la = std::stoi(spec.label(a));
      const int lb = std::stoi(spec.label(b));
      beta[TypePair(a, b)] = table.at(TypePair(la, lb));
    }
  }
  return SimulationTruth{std::move(spec), SymMatrix::symmetrized(prec), std::move(types), std::move(beta),
                         2 * all.size(), diag};
}

void write_true_model(const SimulationTruth& truth, const std::filesystem::path& json_path) {
  using nlohmann::json;
  auto csv_path = json_path;
  csv_path.replace_extension(".precision.csv");
  write_matrix_csv(truth.precision, csv_path);
  json doc;
  doc["types"] = truth.types;
  json nnz = json::array();
  for (std::size_t i = 0; i < truth.spec.p(); ++i) {
    for (std::size_t j : truth.spec.neighbors(i)) {
      if (i < j) nnz.push_back({i, j});
    }
  }
  doc["adjacency_nnz"] = nnz;
  doc["precision"] = csv_path.filename().string();
  json table = json::object();
  for (const auto& [pair, value] : truth.beta) table[truth.spec.pair_label(pair.first, pair.second)] = value;
  doc["beta_table"] = table;
  std::ofstream out(json_path);
  if (!out) throw IoError("cannot write " + json_path.string());
  out << doc.dump(2) << '\n';
}

TrueModelFixture read_true_model(const std::filesystem::path& json_path) {
  using nlohmann::json;
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open " + json_path.string());
  json doc;
  try {
    doc = json::parse(in);
    TrueModelFixture out;
    out.types = doc.at("types").get<std::vector<int>>();
    for (const auto& e : doc.at("adjacency_nnz")) {
      out.adjacency_nnz.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    }
    out.precision = read_matrix_csv(json_path.parent_path() / doc.at("precision").get<std::string>());
    out.beta_table = doc.at("beta_table").get<std::map<std::string, double>>();
    return out;
  } catch (const json::exception& e) {
    throw ParseError(json_path.string() + ": " + e.what());
  }
}

}  // namespace cargo
