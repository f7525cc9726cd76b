#pragma once

// Pipelines behind the command-line subcommands. Each run_* function reads a
// RunConfig, writes its files under config.out and returns what it wrote.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cargo/config.hpp"

namespace cargo {

// ---- estimate ---------------------------------------------------------

struct ParameterReport {
  std::string beta_mode;
  std::vector<std::string> type_labels;
  std::map<std::string, double> kappa;
  // Every unordered pair of present types; empty when the pair has no edge.
  std::map<std::string, std::optional<double>> beta;
  bool converged = false;
  bool inner_all_converged = false;
  double gap = 0.0;
  double f_star = 0.0;
  std::size_t p = 0;
  std::size_t n_samples = 0;
  int outer_iterations = 0;
};

ParameterReport make_parameter_report(const ParameterEstimate& est, const ConstraintSpec& spec,
                                      const SolveResult& result, std::size_t n_samples);
void write_parameter_report_json(const ParameterReport& report, const std::filesystem::path& path);
void write_parameter_report_csv(const ParameterReport& report, const std::filesystem::path& path);
ParameterReport read_parameter_report_json(const std::filesystem::path& path);

struct EstimateOutcome {
  ParameterReport report;
  SolveResult result;
  std::vector<std::filesystem::path> files;
};

// Cell -> neighbors -> type-centering -> solve -> extraction. Writes
// report.{json,csv}, trace.csv, X_star.csv and Y_star.csv.
EstimateOutcome run_estimate(const RunConfig& config);

// ---- simulate ---------------------------------------------------------

struct ReplicateRecord {
  std::string method;
  std::size_t p = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  bool converged = false;
  double lambda = 0.0;    // glasso only
  std::size_t nnz = 0;    // glasso only
  std::size_t target = 0; // glasso only
  // Keyed by the design labels 1, 2, 3. A pair with no edge in the
  // replicate's graph is estimated as 0.
  std::map<TypePair, double> beta_hat;
};

struct MseRow {
  std::string method;
  std::size_t p = 0;
  int used = 0;
  int failed = 0;
  int not_converged = 0;
  std::map<TypePair, double> mse;
  std::map<TypePair, double> se;
  double aggregate = 0.0;  // mean of the per-pair MSEs
};

struct MseReport {
  std::vector<MseRow> rows;
  std::vector<ReplicateRecord> replicates;
  std::vector<std::filesystem::path> files;
};

// MSE_l = sum_k (bhat_l^k - b_l)^2 / K over successful replicates, summed
// in replicate order; SE is the standard error of that mean.
std::vector<MseRow> compute_mse(const std::vector<ReplicateRecord>& records);

// One replicate of the study for the listed methods, on a shared draw.
std::vector<ReplicateRecord> run_replicate(std::size_t p, int rep, std::uint64_t seed, const RunConfig& config);

// Writes replicates.csv and mse_table.csv or mse_report.json. MSE values in
// the table and report are multiplied by 100.
MseReport run_simulate(const RunConfig& config);

void write_replicates_csv(const std::vector<ReplicateRecord>& records, const std::filesystem::path& path);
std::vector<ReplicateRecord> read_replicates_csv(const std::filesystem::path& path);

// Solver settings the study uses: the inner cap defaults to 100 and the
// glasso solves stop at the certificate tolerance unless configured.
SolverConfig study_solver_config(const RunConfig& config, std::size_t p);
GlassoConfig study_glasso_config(const RunConfig& config);

// ---- distances --------------------------------------------------------

struct NeighborEntry {
  std::size_t node = 0;
  double distance = 0.0;
};

struct DistanceReport {
  std::vector<std::string> type_labels;
  std::vector<std::vector<NeighborEntry>> neighbors;  // per node, sorted by distance
  std::map<std::string, std::size_t> census;          // unordered edges per type pair
  std::vector<std::filesystem::path> files;
};

DistanceReport run_distances(const RunConfig& config);

// ---- glasso -----------------------------------------------------------

struct GlassoOutcome {
  GlassoResult fit;
  std::optional<LambdaTuning> tuning;
  std::vector<std::filesystem::path> files;
};

// Reads S (matrix) or samples (data, one row per sample, S = sum x x^T),
// fits at a fixed lambda or tunes to target_nnz, writes glasso_X.csv and
// glasso_report.json.
GlassoOutcome run_glasso(const RunConfig& config);

// Headerless numeric CSV, one row per line.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path);

}  // namespace cargo
