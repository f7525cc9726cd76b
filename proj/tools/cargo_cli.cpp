// Command-line front end. Talks to the library only through cargo.h.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cargo/cargo.h"

namespace {

struct Common {
  std::string config;
  std::optional<long long> seed;
  std::string out;
  std::string format;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Random seed")->check(CLI::NonNegativeNumber);
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

void apply_common(const Common& c, nlohmann::json& o) {
  if (c.seed) o["seed"] = *c.seed;
  if (!c.out.empty()) o["out"] = c.out;
  if (!c.format.empty()) o["format"] = c.format;
}

std::vector<long long> parse_int_list(const std::string& text) {
  std::vector<long long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = std::stoll(item, &used);
    if (used != item.size() || v < 1) throw CLI::ValidationError("--p", "expected a comma list of positive integers");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("--p", "empty list");
  return out;
}

std::vector<std::string> parse_word_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

int exit_code(cargo_status s) {
  switch (s) {
    case CARGO_OK: return 0;
    case CARGO_NOT_CONVERGED: return 3;
    case CARGO_INVALID_ARGUMENT:
    case CARGO_DIMENSION_MISMATCH:
    case CARGO_NOT_POSITIVE_DEFINITE:
    case CARGO_PARSE_ERROR:
    case CARGO_IO_ERROR: return 2;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured precision matrix estimation for lattice alloys"};
  app.require_subcommand(1);

  Common est_c, sim_c, dist_c, gl_c;

  auto* est = app.add_subcommand("estimate", "Estimate CAR parameters from one configuration");
  add_common(est, est_c);
  std::string cell, neighbor_mode, distance_mode, beta_mode;
  std::vector<double> box;
  est->add_option("--cell", cell, "Supercell file (JSON, or CSV with --box)");
  est->add_option("--box", box, "Box lengths for CSV cells, e.g. 3.6,3.6,3.6")->expected(3)->delimiter(',');
  est->add_option("--neighbor-mode", neighbor_mode, "first-shell or k:<c>");
  est->add_option("--distance-mode", distance_mode, "min-image or paper6");
  est->add_option("--beta-mode", beta_mode, "car or raw")->check(CLI::IsMember({"car", "raw"}));

  auto* sim = app.add_subcommand("simulate", "Run the replicated simulation study");
  add_common(sim, sim_c);
  std::string dims, methods;
  std::optional<long long> reps, threads;
  std::optional<double> density;
  sim->add_option("--p", dims, "Dimensions, e.g. 20,50,100");
  sim->add_option("--reps", reps, "Replicates per dimension")->check(CLI::PositiveNumber);
  sim->add_option("--density", density, "Edge density of the truth graph")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--methods", methods, "cargo,glasso");
  sim->add_option("--threads", threads, "Worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);

  auto* dist = app.add_subcommand("distances", "Neighbor lists and pair census for a supercell");
  add_common(dist, dist_c);
  std::string d_cell, d_neighbor_mode, d_distance_mode;
  std::vector<double> d_box;
  dist->add_option("--cell", d_cell, "Supercell file");
  dist->add_option("--box", d_box, "Box lengths for CSV cells")->expected(3)->delimiter(',');
  dist->add_option("--neighbor-mode", d_neighbor_mode, "first-shell or k:<c>");
  dist->add_option("--distance-mode", d_distance_mode, "min-image or paper6");

  auto* gl = app.add_subcommand("glasso", "Graphical lasso baseline");
  add_common(gl, gl_c);
  std::string matrix, data;
  std::optional<double> lambda;
  std::optional<long long> target_nnz;
  gl->add_option("--matrix", matrix, "Scatter matrix CSV");
  gl->add_option("--data", data, "Sample CSV, one row per sample");
  gl->add_option("--lambda", lambda, "Penalty")->check(CLI::NonNegativeNumber);
  gl->add_option("--target-nnz", target_nnz, "Tune lambda to this many nonzeros")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  nlohmann::json o = nlohmann::json::object();
  const Common* common = nullptr;
  std::string command;
  try {
    if (est->parsed()) {
      command = "estimate";
      common = &est_c;
      if (!cell.empty()) o["estimate"]["cell"] = cell;
      if (!box.empty()) o["estimate"]["box"] = box;
      if (!beta_mode.empty()) o["estimate"]["beta_mode"] = beta_mode;
      if (!neighbor_mode.empty()) o["neighbors"]["mode"] = neighbor_mode;
      if (!distance_mode.empty()) o["neighbors"]["distance_mode"] = distance_mode;
    } else if (sim->parsed()) {
      command = "simulate";
      common = &sim_c;
      if (!dims.empty()) o["simulate"]["p"] = parse_int_list(dims);
      if (reps) o["simulate"]["reps"] = *reps;
      if (density) o["simulate"]["density"] = *density;
      if (!methods.empty()) o["simulate"]["methods"] = parse_word_list(methods);
      if (threads) o["simulate"]["threads"] = *threads;
    } else if (dist->parsed()) {
      command = "distances";
      common = &dist_c;
      if (!d_cell.empty()) o["estimate"]["cell"] = d_cell;
      if (!d_box.empty()) o["estimate"]["box"] = d_box;
      if (!d_neighbor_mode.empty()) o["neighbors"]["mode"] = d_neighbor_mode;
      if (!d_distance_mode.empty()) o["neighbors"]["distance_mode"] = d_distance_mode;
    } else {
      command = "glasso";
      common = &gl_c;
      if (!matrix.empty()) o["glasso"]["matrix"] = matrix;
      if (!data.empty()) o["glasso"]["data"] = data;
      if (lambda) o["glasso"]["lambda"] = *lambda;
      if (target_nnz) o["glasso"]["target_nnz"] = *target_nnz;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  apply_common(*common, o);

  char* summary = nullptr;
  const cargo_status s = cargo_run(command.c_str(), common->config.empty() ? nullptr : common->config.c_str(),
                                   o.dump().c_str(), &summary);
  if (summary) {
    std::cout << summary << "\n";
    cargo_string_free(summary);
  }
  if (s != CARGO_OK) {
    std::cerr << "error (" << cargo_status_name(s) << "): " << cargo_last_error() << "\n";
  }
  return exit_code(s);
}
