#include "cargo/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace cargo {

namespace {

double wrap(double x, double length) {
  double w = std::fmod(x, length);
  if (w < 0.0) w += length;
  // fmod of a value just below zero can round up to exactly `length`.
  if (w >= length) w = 0.0;
  return w;
}

}  // namespace

Supercell::Supercell(std::array<double, 3> box, std::vector<Atom> atoms) : box_(box) {
  for (double l : box_) {
    if (!(l > 0.0) || !std::isfinite(l)) throw InvalidArgument("supercell box lengths must be positive");
  }
  if (atoms.empty()) throw InvalidArgument("supercell has no atoms");
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.id < b.id; });
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (atoms[k].id != static_cast<int>(k) + 1) {
      throw InvalidArgument("atom ids must be unique and contiguous 1..p (problem near id " +
                            std::to_string(atoms[k].id) + ")");
    }
    if (atoms[k].type.empty()) throw InvalidArgument("atom " + std::to_string(atoms[k].id) + " has no type");
    for (int ax = 0; ax < 3; ++ax) {
      if (!std::isfinite(atoms[k].pos[ax])) {
        throw InvalidArgument("atom " + std::to_string(atoms[k].id) + " has a non-finite coordinate");
      }
      atoms[k].pos[ax] = wrap(atoms[k].pos[ax], box_[ax]);
    }
  }
  atoms_ = std::move(atoms);
  std::map<std::string, int> index;
  types_.reserve(atoms_.size());
  for (const auto& a : atoms_) {
    auto [it, inserted] = index.emplace(a.type, static_cast<int>(labels_.size()));
    if (inserted) labels_.push_back(a.type);
    types_.push_back(it->second);
  }
}

bool Supercell::has_all_moments() const {
  return std::all_of(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.moment.has_value(); });
}

std::vector<double> Supercell::moments() const {
  std::vector<double> out;
  out.reserve(atoms_.size());
  for (const auto& a : atoms_) {
    if (!a.moment) throw InvalidArgument("atom " + std::to_string(a.id) + " has no magnetic moment");
    out.push_back(*a.moment);
  }
  return out;
}

double topo_distance(const Supercell& cell, std::size_t i, std::size_t j, DistanceMode mode) {
  if (i >= cell.size() || j >= cell.size()) throw InvalidArgument("topo_distance: node index out of range");
  if (i == j) return 0.0;
  if (i > j) std::swap(i, j);  // bitwise symmetric
  const auto& pi = cell.atom(i).pos;
  const auto& pj = cell.atom(j).pos;
  const auto& box = cell.box();
  std::array<double, 3> d{pi[0] - pj[0], pi[1] - pj[1], pi[2] - pj[2]};
  double best = std::numeric_limits<double>::infinity();
  if (mode == DistanceMode::minimum_image) {
    for (int sx = -1; sx <= 1; ++sx) {
      for (int sy = -1; sy <= 1; ++sy) {
        for (int sz = -1; sz <= 1; ++sz) {
          const double dx = d[0] + sx * box[0];
          const double dy = d[1] + sy * box[1];
          const double dz = d[2] + sz * box[2];
          best = std::min(best, std::sqrt(dx * dx + dy * dy + dz * dz));
        }
      }
    }
    return best;
  }
  best = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  for (int ax = 0; ax < 3; ++ax) {
    for (int s : {-1, 1}) {
      auto e = d;
      e[ax] += s * box[ax];
      best = std::min(best, std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]));
    }
  }
  return best;
}

NeighborPolicy NeighborPolicy::first_shell(double rel_tol, DistanceMode dm) {
  NeighborPolicy p;
  p.mode = Mode::first_shell;
  p.rel_tol = rel_tol;
  p.distance_mode = dm;
  p.validate();
  return p;
}

NeighborPolicy NeighborPolicy::k_nearest(int c, DistanceMode dm) {
  NeighborPolicy p;
  p.mode = Mode::k_nearest;
  p.k = c;
  p.distance_mode = dm;
  p.validate();
  return p;
}

void NeighborPolicy::validate() const {
  if (mode == Mode::first_shell && !(rel_tol > 0.0)) {
    throw InvalidArgument("first-shell relative tolerance must be positive");
  }
  if (mode == Mode::k_nearest && k < 1) throw InvalidArgument("k-nearest neighbor count must be >= 1");
}

ConstraintSpec::ConstraintSpec(std::vector<int> types, std::vector<std::vector<std::size_t>> neighbors,
                               std::vector<std::string> type_labels)
    : types_(std::move(types)), neighbors_(std::move(neighbors)), labels_(std::move(type_labels)) {
  const std::size_t p = types_.size();
  if (p == 0) throw InvalidArgument("constraint spec needs at least one node");
  if (neighbors_.size() != p) throw DimensionMismatch("neighbor list count does not match type vector");
  const int t = num_types();
  for (int s : types_) {
    if (s < 0 || s >= t) throw InvalidArgument("node type index out of range of type labels");
  }
  for (std::size_t i = 0; i < p; ++i) {
    auto& nb = neighbors_[i];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    for (std::size_t j : nb) {
      if (j >= p) throw InvalidArgument("neighbor index out of range");
      if (j == i) throw InvalidArgument("node " + std::to_string(i) + " lists itself as a neighbor");
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j : neighbors_[i]) {
      if (!std::binary_search(neighbors_[j].begin(), neighbors_[j].end(), i)) {
        throw InvalidArgument("neighbor sets are not symmetric (" + std::to_string(i) + " -> " +
                              std::to_string(j) + ")");
      }
    }
  }

  diag_.assign(static_cast<std::size_t>(t), {});
  for (std::size_t i = 0; i < p; ++i) diag_[static_cast<std::size_t>(types_[i])].push_back(i);

  class_lookup_.assign(static_cast<std::size_t>(t * t), -1);
  // Unordered pairs first so class (a,b) sits next to class (b,a); positions
  // of (b,a) are the mirrors of (a,b) in the same order.
  for (int a = 0; a < t; ++a) {
    for (int b = a; b < t; ++b) {
      OffdiagClass ab{a, b, {}};
      for (std::size_t i = 0; i < p; ++i) {
        if (types_[i] != a) continue;
        for (std::size_t j : neighbors_[i]) {
          if (types_[j] == b) ab.positions.emplace_back(i, j);
        }
      }
      if (ab.positions.empty()) continue;
      if (a == b) {
        class_lookup_[static_cast<std::size_t>(a * t + b)] = static_cast<int>(offdiag_.size());
        offdiag_.push_back(std::move(ab));
        continue;
      }
      OffdiagClass ba{b, a, {}};
      ba.positions.reserve(ab.positions.size());
      for (auto [i, j] : ab.positions) ba.positions.emplace_back(j, i);
      class_lookup_[static_cast<std::size_t>(a * t + b)] = static_cast<int>(offdiag_.size());
      offdiag_.push_back(std::move(ab));
      class_lookup_[static_cast<std::size_t>(b * t + a)] = static_cast<int>(offdiag_.size());
      offdiag_.push_back(std::move(ba));
    }
  }
}

std::string ConstraintSpec::pair_label(int a, int b) const {
  if (a > b) std::swap(a, b);
  return label(a) + "-" + label(b);
}

bool ConstraintSpec::is_neighbor(std::size_t i, std::size_t j) const {
  const auto& nb = neighbors_.at(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::size_t ConstraintSpec::max_degree() const {
  std::size_t m = 0;
  for (const auto& nb : neighbors_) m = std::max(m, nb.size());
  return m;
}

std::size_t ConstraintSpec::num_allowed_offdiag() const {
  std::size_t n = 0;
  for (const auto& nb : neighbors_) n += nb.size();
  return n;
}

int ConstraintSpec::offdiag_class_index(int a, int b) const {
  const int t = num_types();
  if (a < 0 || b < 0 || a >= t || b >= t) return -1;
  return class_lookup_[static_cast<std::size_t>(a * t + b)];
}

ConstraintSpec build_neighbors(const Supercell& cell, const NeighborPolicy& policy) {
  policy.validate();
  const std::size_t p = cell.size();
  if (p < 2) throw InvalidArgument("neighbor construction needs at least 2 atoms");

  std::vector<double> dist(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const double d = topo_distance(cell, i, j, policy.distance_mode);
      dist[i * p + j] = d;
      dist[j * p + i] = d;
    }
  }

  std::vector<std::set<std::size_t>> adj(p);
  for (std::size_t i = 0; i < p; ++i) {
    std::vector<std::pair<double, std::size_t>> row;
    row.reserve(p - 1);
    for (std::size_t j = 0; j < p; ++j) {
      if (j != i) row.emplace_back(dist[i * p + j], j);
    }
    std::sort(row.begin(), row.end());
    if (!(row.front().first > 0.0)) {
      throw InvalidArgument("degenerate cell: atom " + std::to_string(i + 1) + " coincides with atom " +
                            std::to_string(row.front().second + 1));
    }
    double cutoff = 0.0;
    if (policy.mode == NeighborPolicy::Mode::first_shell) {
      cutoff = (1.0 + policy.rel_tol) * row.front().first;
    } else {
      const std::size_t c = std::min<std::size_t>(static_cast<std::size_t>(policy.k), row.size());
      // Ties at the c-th distance are all included.
      cutoff = row[c - 1].first * (1.0 + 1e-9);
    }
    for (const auto& [d, j] : row) {
      if (d > cutoff) break;
      adj[i].insert(j);
      adj[j].insert(i);
    }
  }

  std::vector<std::vector<std::size_t>> neighbors(p);
  for (std::size_t i = 0; i < p; ++i) neighbors[i].assign(adj[i].begin(), adj[i].end());
  return ConstraintSpec(cell.types(), std::move(neighbors), cell.type_labels());
}

ConstraintSpec build_spec_from_adjacency(std::span<const int> types, const Eigen::MatrixXi& adjacency,
                                         std::vector<std::string> labels) {
  const auto p = static_cast<Eigen::Index>(types.size());
  if (adjacency.rows() != p || adjacency.cols() != p) {
    throw DimensionMismatch("adjacency must be p x p with p = number of types");
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    if (adjacency(i, i) != 0) throw InvalidArgument("adjacency must have a zero diagonal");
    for (Eigen::Index j = 0; j < p; ++j) {
      const int v = adjacency(i, j);
      if (v != 0 && v != 1) throw InvalidArgument("adjacency entries must be 0 or 1");
      if (v != adjacency(j, i)) {
        throw InvalidArgument("adjacency is not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
      }
    }
  }
  std::vector<int> distinct(types.begin(), types.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (labels.empty()) {
    for (int v : distinct) labels.push_back(std::to_string(v));
  } else if (labels.size() != distinct.size()) {
    throw InvalidArgument("expected one label per distinct type value");
  }
  std::vector<int> dense(types.size());
  for (std::size_t i = 0; i < types.size(); ++i) {
    dense[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), types[i]) -
                                distinct.begin());
  }
  std::vector<std::vector<std::size_t>> neighbors(types.size());
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (adjacency(i, j)) neighbors[static_cast<std::size_t>(i)].push_back(static_cast<std::size_t>(j));
    }
  }
  return ConstraintSpec(std::move(dense), std::move(neighbors), std::move(labels));
}

SymMatrix project_onto_n(const SymMatrix& z, const ConstraintSpec& spec) {
  if (z.dim() != spec.p()) {
    throw DimensionMismatch("project_onto_n: matrix dim " + std::to_string(z.dim()) + " vs spec p " +
                            std::to_string(spec.p()));
  }
  const auto& src = z.dense();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(src.rows(), src.cols());
  for (const auto& cls : spec.diag_classes()) {
    if (cls.empty()) continue;
    double sum = 0.0;
    for (std::size_t i : cls) sum += src(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    const double mean = sum / static_cast<double>(cls.size());
    for (std::size_t i : cls) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = mean;
  }
  for (const auto& cls : spec.offdiag_classes()) {
    double sum = 0.0;
    for (auto [i, j] : cls.positions) sum += src(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    const double mean = sum / static_cast<double>(cls.positions.size());
    for (auto [i, j] : cls.positions) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mean;
  }
  // Class (b,a) visits the mirrors of (a,b) in the same order, so for a
  // symmetric input both means are the same floating-point value and `out`
  // is exactly symmetric; symmetrized() then leaves it unchanged.
  return SymMatrix::symmetrized(out);
}

}  // namespace cargo
