#pragma once

// Run configuration shared by every subcommand. Files are JSON documents
// with nested tables; command-line flags arrive as a second document that is
// merged over the file before parsing.
//
//   {
//     "seed": 1, "out": "results", "format": "json",
//     "solver":    {"nu": 25, "scale_b": 1.0, "eps_floor": 0.0183, "gamma0": 1,
//                   "eta": 2, "k_max": 35, "inner_tol_scale": 1, "inner_tol_base": 0.5,
//                   "l_max": 5000, "gap_tol": 1e-4, "record_trace": true},
//     "neighbors": {"mode": "first-shell", "rel_tol": 1e-6, "distance_mode": "min-image"},
//     "estimate":  {"cell": "cell.json", "box": [1, 1, 1], "beta_mode": "car"},
//     "simulate":  {"p": [20, 50, 100], "reps": 50, "density": 0.1,
//                   "methods": ["cargo", "glasso"], "threads": 0},
//     "glasso":    {"lambda": 0.1, "target_nnz": 60, "matrix": "S.csv", ...}
//   }

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cargo/glasso.hpp"
#include "cargo/lattice.hpp"
#include "cargo/solver.hpp"

namespace cargo {

enum class OutputFormat { csv, json };

// Prior scale: a scalar multiple of I or a matrix CSV.
struct ScaleSpec {
  std::optional<double> scalar;
  std::optional<std::filesystem::path> path;

  std::optional<SymMatrix> materialize(std::size_t p) const;
};

struct SolverSettings {
  SolverConfig config;
  ScaleSpec scale_b;
  bool l_max_set = false;

  // `config` with the prior scale filled in for dimension p.
  SolverConfig for_dim(std::size_t p) const;
};

struct EstimateSettings {
  std::optional<std::filesystem::path> cell;
  std::optional<std::array<double, 3>> box;
  BetaMode beta_mode = BetaMode::car;
};

struct SimulateSettings {
  std::vector<std::size_t> dims{20, 50, 100};
  int reps = 50;
  double density = 0.10;
  std::vector<std::string> methods{"cargo", "glasso"};
  int threads = 0;  // 0 picks the hardware concurrency
};

struct GlassoSettings {
  GlassoConfig config;
  bool lambda_set = false;
  bool max_sweeps_set = false;
  bool stop_tol_set = false;
  std::optional<std::size_t> target_nnz;
  std::optional<std::filesystem::path> matrix;
  std::optional<std::filesystem::path> data;
  int max_steps = 40;
  double min_lambda_ratio = 1e-3;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out = ".";
  OutputFormat format = OutputFormat::json;
  SolverSettings solver;
  NeighborPolicy neighbors;
  EstimateSettings estimate;
  SimulateSettings simulate;
  GlassoSettings glasso;
};

// "first-shell" or "k:<c>".
NeighborPolicy parse_neighbor_mode(const std::string& text, NeighborPolicy base = {});
// "min-image" or "paper6".
DistanceMode parse_distance_mode(const std::string& text);
BetaMode parse_beta_mode(const std::string& text);
OutputFormat parse_format(const std::string& text);
std::string to_string(BetaMode mode);

// Unknown keys are errors. Relative paths in a config file resolve against
// the file's directory; paths in `overrides_json` are taken as given.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::string& overrides_json);

}  // namespace cargo
