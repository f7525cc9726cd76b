#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cargo/harness.hpp"
#include "oracles.hpp"

using namespace cargo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
  const auto dir = fs::temp_directory_path() / "cargo_harness" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string with_out(const fs::path& out, const std::string& rest) {
  nlohmann::json j = nlohmann::json::parse(rest);
  j["out"] = out.string();
  return j.dump();
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const auto c = load_run_config(std::nullopt, "{}");
  CHECK(c.seed == 1);
  CHECK(c.format == OutputFormat::json);
  CHECK(c.solver.config.k_max == 35);
  CHECK(c.solver.config.l_max == 5000);
  CHECK(c.solver.config.gap_tol == 1e-4);
  CHECK(c.solver.config.eps_floor == doctest::Approx(std::exp(-4.0)));
  CHECK(c.simulate.dims == std::vector<std::size_t>{20, 50, 100});
  CHECK(c.simulate.reps == 50);

  const auto o = load_run_config(std::nullopt,
                                 R"({"seed": 9, "format": "csv", "solver": {"k_max": 4},
                                     "simulate": {"p": [20], "methods": ["glasso"]}})");
  CHECK(o.seed == 9);
  CHECK(o.format == OutputFormat::csv);
  CHECK(o.solver.config.k_max == 4);
  CHECK(o.simulate.dims == std::vector<std::size_t>{20});
  CHECK(o.simulate.methods == std::vector<std::string>{"glasso"});

  CHECK_THROWS_AS(load_run_config(std::nullopt, R"({"solvr": {}})"), ParseError);
  CHECK_THROWS_AS(load_run_config(std::nullopt, R"({"solver": {"kmax": 1}})"), ParseError);
  CHECK_THROWS_AS(load_run_config(std::nullopt, R"({"simulate": {"methods": ["lasso"]}})"), InvalidArgument);
  CHECK_THROWS(load_run_config(std::nullopt, "{not json"));
}

TEST_CASE("config file paths resolve against the file") {
  const auto c = load_run_config(fs::path(oracle::fixture_path("estimate.json")), "{}");
  REQUIRE(c.estimate.cell);
  CHECK(fs::equivalent(*c.estimate.cell, oracle::fixture_path("hea24_moments.json")));
  CHECK(c.seed == 2);
  CHECK(c.solver.config.k_max == 20);
  const auto o = load_run_config(fs::path(oracle::fixture_path("estimate.json")), R"({"seed": 5})");
  CHECK(o.seed == 5);
  CHECK_THROWS_AS(load_run_config(fs::path(oracle::fixture_path("bad_key.json")), "{}"), ParseError);
  CHECK_THROWS_AS(load_run_config(fs::path("/nonexistent/cfg.json"), "{}"), IoError);
}

TEST_CASE("mode strings") {
  CHECK(parse_neighbor_mode("first-shell").mode == NeighborPolicy::Mode::first_shell);
  const auto k = parse_neighbor_mode("k:7");
  CHECK(k.mode == NeighborPolicy::Mode::k_nearest);
  CHECK(k.k == 7);
  CHECK_THROWS_AS(parse_neighbor_mode("k:0"), InvalidArgument);
  CHECK_THROWS_AS(parse_neighbor_mode("k:x"), InvalidArgument);
  CHECK_THROWS_AS(parse_neighbor_mode("shell"), InvalidArgument);
  CHECK(parse_distance_mode("min-image") == DistanceMode::minimum_image);
  CHECK(parse_distance_mode("paper6") == DistanceMode::paper6);
  CHECK_THROWS_AS(parse_distance_mode("euclid"), InvalidArgument);
  CHECK(parse_beta_mode("raw") == BetaMode::raw);
  CHECK(to_string(BetaMode::car) == "car");
  CHECK_THROWS_AS(parse_format("xml"), InvalidArgument);
}

TEST_CASE("compute_mse against a direct recomputation") {
  const auto truth = simulation_beta();
  std::vector<ReplicateRecord> recs;
  oracle::Rng rng(12);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int rep = 0; rep < 7; ++rep) {
    ReplicateRecord r;
    r.method = "cargo";
    r.p = 20;
    r.rep = rep;
    r.ok = true;
    r.converged = rep != 3;
    for (const auto& [pair, v] : truth) r.beta_hat[pair] = v + noise(rng);
    recs.push_back(r);
  }
  ReplicateRecord bad;
  bad.method = "cargo";
  bad.p = 20;
  bad.rep = 7;
  recs.push_back(bad);

  const auto rows = compute_mse(recs);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].used == 7);
  CHECK(rows[0].failed == 1);
  CHECK(rows[0].not_converged == 1);
  double agg = 0.0;
  for (const auto& [pair, v] : truth) {
    std::vector<double> e;
    for (int k = 0; k < 7; ++k) e.push_back(std::pow(recs[k].beta_hat.at(pair) - v, 2));
    double mean = 0.0;
    for (double x : e) mean += x / 7.0;
    double var = 0.0;
    for (double x : e) var += (x - mean) * (x - mean) / 6.0;
    CHECK(rows[0].mse.at(pair) == doctest::Approx(mean).epsilon(1e-12));
    CHECK(rows[0].se.at(pair) == doctest::Approx(std::sqrt(var / 7.0)).epsilon(1e-10));
    agg += mean / 6.0;
  }
  CHECK(rows[0].aggregate == doctest::Approx(agg).epsilon(1e-12));

  // An estimator that returns the truth has zero error.
  for (auto& r : recs) r.beta_hat = truth;
  for (const auto& [pair, v] : compute_mse(recs)[0].mse) CHECK(v == 0.0);
}

TEST_CASE("replicates are reproducible and round trip through CSV") {
  auto c = load_run_config(std::nullopt, R"({"simulate": {"p": [20], "reps": 2, "methods": ["cargo", "glasso"]}})");
  const auto a = run_replicate(20, 0, 77, c);
  const auto b = run_replicate(20, 0, 77, c);
  REQUIRE(a.size() == 2);
  for (std::size_t m = 0; m < 2; ++m) {
    CHECK(a[m].ok);
    CHECK(a[m].beta_hat == b[m].beta_hat);
    CHECK(a[m].beta_hat.size() == 6);
  }
  CHECK(a[1].target == generate_simulation_truth(20, 0.1, 77).offdiag_nnz + 20);

  const auto dir = scratch("rt");
  write_replicates_csv(a, dir / "r.csv");
  const auto back = read_replicates_csv(dir / "r.csv");
  REQUIRE(back.size() == a.size());
  for (std::size_t m = 0; m < a.size(); ++m) {
    CHECK(back[m].method == a[m].method);
    CHECK(back[m].converged == a[m].converged);
    for (const auto& [pair, v] : a[m].beta_hat) CHECK(back[m].beta_hat.at(pair) == v);
  }
}

TEST_CASE("run_simulate writes consistent tables") {
  const auto dir = scratch("sim");
  const auto c = load_run_config(std::nullopt, with_out(dir, R"({"seed": 4, "format": "json",
      "simulate": {"p": [20], "reps": 3, "methods": ["cargo", "glasso"], "threads": 1}})"));
  const auto rep = run_simulate(c);
  CHECK(fs::exists(dir / "replicates.csv"));
  CHECK(fs::exists(dir / "mse_report.json"));
  REQUIRE(rep.rows.size() == 2);
  const auto recomputed = compute_mse(read_replicates_csv(dir / "replicates.csv"));
  REQUIRE(recomputed.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(recomputed[i].method == rep.rows[i].method);
    CHECK(recomputed[i].aggregate == doctest::Approx(rep.rows[i].aggregate).epsilon(1e-9));
  }
  // Same seed, same numbers, whatever the thread count.
  const auto dir2 = scratch("sim2");
  auto c2 = c;
  c2.out = dir2;
  c2.simulate.threads = 2;
  const auto again = run_simulate(c2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(again.rows[i].aggregate == rep.rows[i].aggregate);
}

TEST_CASE("parameter report round trip") {
  ParameterReport r;
  r.beta_mode = "car";
  r.type_labels = {"Co", "Cr"};
  r.kappa = {{"Co", 0.5}, {"Cr", 0.75}};
  r.beta = {{"Co-Co", 0.1}, {"Co-Cr", -0.2}, {"Cr-Cr", std::nullopt}};
  r.converged = true;
  r.gap = 1e-5;
  r.f_star = -3.25;
  r.p = 24;
  r.n_samples = 1;
  r.outer_iterations = 35;
  const auto dir = scratch("report");
  write_parameter_report_json(r, dir / "r.json");
  const auto b = read_parameter_report_json(dir / "r.json");
  CHECK(b.type_labels == r.type_labels);
  CHECK(b.kappa == r.kappa);
  CHECK(b.beta == r.beta);
  CHECK(b.f_star == r.f_star);
  CHECK(b.outer_iterations == 35);
}

TEST_CASE("run_estimate on the layered cell") {
  const auto dir = scratch("est");
  auto c = load_run_config(std::nullopt, with_out(dir, "{}"));
  c.estimate.cell = oracle::fixture_path("hea24_moments.json");
  const auto out = run_estimate(c);
  for (const char* f : {"report.json", "trace.csv", "X_star.csv", "Y_star.csv"}) CHECK(fs::exists(dir / f));
  CHECK(out.report.p == 24);
  CHECK(out.report.n_samples == 1);
  CHECK(out.report.type_labels.size() == 4);
  CHECK(out.report.beta.size() == 10);
  CHECK(out.result.converged);
  CHECK(min_eig(out.result.x_star) >= c.solver.config.eps_floor - 1e-12);
  const auto back = read_matrix_csv(dir / "Y_star.csv");
  CHECK((back.dense() - out.result.y_star.dense()).norm() <= 1e-12 * (1.0 + back.dense().norm()));

  c.estimate.cell = oracle::fixture_path("hea24.json");
  CHECK_THROWS_AS(run_estimate(c), InvalidArgument);
  c.estimate.cell.reset();
  CHECK_THROWS_AS(run_estimate(c), InvalidArgument);
}

TEST_CASE("run_distances census") {
  const auto dir = scratch("dist");
  auto c = load_run_config(std::nullopt, with_out(dir, R"({"format": "csv"})"));
  c.estimate.cell = oracle::fixture_path("toy_cube.json");
  const auto d = run_distances(c);
  CHECK(fs::exists(dir / "neighbors.csv"));
  CHECK(fs::exists(dir / "census.csv"));
  REQUIRE(d.neighbors.size() == 27);
  for (const auto& n : d.neighbors) {
    CHECK(n.size() == 6);
    for (const auto& e : n) CHECK(e.distance == doctest::Approx(1.0 / 3.0));
  }
  std::size_t edges = 0;
  for (const auto& [k, v] : d.census) edges += v;
  CHECK(edges == 27 * 6 / 2);
}

TEST_CASE("run_glasso from a matrix and from samples") {
  const auto dir = scratch("gl");
  auto c = load_run_config(std::nullopt, with_out(dir, R"({"glasso": {"lambda": 0.2}})"));
  c.glasso.matrix = oracle::fixture_path("s6.csv");
  const auto g = run_glasso(c);
  CHECK(g.fit.converged);
  CHECK(g.fit.kkt.pass);
  CHECK_FALSE(g.tuning);
  CHECK(fs::exists(dir / "glasso_X.csv"));

  std::ofstream(dir / "x.csv") << "1,0\n0,1\n1,1\n";
  c.glasso.matrix.reset();
  c.glasso.data = dir / "x.csv";
  const auto h = run_glasso(c);
  CHECK(h.fit.x.dim() == 2);

  std::ofstream(dir / "ragged.csv") << "1,0\n0\n";
  c.glasso.data = dir / "ragged.csv";
  CHECK_THROWS_AS(run_glasso(c), ParseError);
}
