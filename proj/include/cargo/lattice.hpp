#pragma once

// Node-typed graphs: periodic supercells, neighbor shells, and the
// equivalence classes that define the structured constraint set N.

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cargo/spectral.hpp"

namespace cargo {

enum class DistanceMode {
  minimum_image,  // all 27 periodic images
  paper6,         // identity image plus the 6 single-axis translations
};

struct Atom {
  int id = 0;
  std::string type;
  std::array<double, 3> pos{};
  std::optional<double> moment;
};

// Orthorhombic periodic cell. Atoms are stored sorted by id with ids
// 1..p, so atom id k lives at node index k - 1. Positions are wrapped
// into [0, L) on every axis.
class Supercell {
public:
  Supercell(std::array<double, 3> box, std::vector<Atom> atoms);

  const std::array<double, 3>& box() const noexcept { return box_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  const Atom& atom(std::size_t node) const { return atoms_.at(node); }

  // Type labels in first-appearance order (by id) and per-node type index.
  const std::vector<std::string>& type_labels() const noexcept { return labels_; }
  const std::vector<int>& types() const noexcept { return types_; }

  bool has_all_moments() const;
  std::vector<double> moments() const;

private:
  std::array<double, 3> box_;
  std::vector<Atom> atoms_;
  std::vector<std::string> labels_;
  std::vector<int> types_;
};

Supercell read_supercell_json(const std::filesystem::path& path);
// CSV with header `id,type,x,y,z,moment`; the moment column may be empty.
Supercell read_supercell_csv(const std::filesystem::path& path, std::array<double, 3> box);
// Dispatches on the extension: .json, otherwise CSV (which then needs a box).
Supercell read_supercell(const std::filesystem::path& path,
                         std::optional<std::array<double, 3>> box = std::nullopt);

// Distance between nodes i and j (0-based) under periodic boundaries.
double topo_distance(const Supercell& cell, std::size_t i, std::size_t j,
                     DistanceMode mode = DistanceMode::minimum_image);

struct NeighborPolicy {
  enum class Mode { first_shell, k_nearest };

  Mode mode = Mode::first_shell;
  double rel_tol = 1e-6;
  int k = 12;
  DistanceMode distance_mode = DistanceMode::minimum_image;

  static NeighborPolicy first_shell(double rel_tol = 1e-6,
                                    DistanceMode dm = DistanceMode::minimum_image);
  static NeighborPolicy k_nearest(int c, DistanceMode dm = DistanceMode::minimum_image);
  void validate() const;
};

// Allowed off-diagonal positions (i, j) with s_i = a and s_j = b.
struct OffdiagClass {
  int a = 0;
  int b = 0;
  std::vector<std::pair<std::size_t, std::size_t>> positions;
};

// Node types, symmetric neighbor sets and the class partition derived from
// them. Immutable once built.
class ConstraintSpec {
public:
  ConstraintSpec(std::vector<int> types, std::vector<std::vector<std::size_t>> neighbors,
                 std::vector<std::string> type_labels);

  std::size_t p() const noexcept { return types_.size(); }
  int num_types() const noexcept { return static_cast<int>(labels_.size()); }
  const std::vector<int>& types() const noexcept { return types_; }
  int type_of(std::size_t i) const { return types_.at(i); }
  const std::vector<std::string>& type_labels() const noexcept { return labels_; }
  const std::string& label(int type) const { return labels_.at(static_cast<std::size_t>(type)); }
  // "Ni-Cr" style name for an unordered pair, lower type index first.
  std::string pair_label(int a, int b) const;

  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }
  bool is_neighbor(std::size_t i, std::size_t j) const;
  std::size_t max_degree() const;
  std::size_t num_allowed_offdiag() const;

  const std::vector<std::vector<std::size_t>>& diag_classes() const noexcept { return diag_; }
  const std::vector<OffdiagClass>& offdiag_classes() const noexcept { return offdiag_; }
  // Index into offdiag_classes() for the ordered pair (a, b), or -1.
  int offdiag_class_index(int a, int b) const;

private:
  std::vector<int> types_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::vector<std::string> labels_;
  std::vector<std::vector<std::size_t>> diag_;
  std::vector<OffdiagClass> offdiag_;
  std::vector<int> class_lookup_;  // num_types^2, row-major by (a, b)
};

ConstraintSpec build_neighbors(const Supercell& cell, const NeighborPolicy& policy);

// Types are arbitrary integers; dense indices follow ascending value and the
// labels are the decimal values unless labels are supplied (one per distinct
// value, ascending). Adjacency must be symmetric 0/1 with zero diagonal.
ConstraintSpec build_spec_from_adjacency(std::span<const int> types,
                                         const Eigen::MatrixXi& adjacency,
                                         std::vector<std::string> labels = {});

// Frobenius projection onto N: class means on the free positions, zeros on
// disallowed off-diagonal positions.
SymMatrix project_onto_n(const SymMatrix& z, const ConstraintSpec& spec);

}  // namespace cargo
