#include "cargo/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace cargo {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_json(const json& doc, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("error writing " + path.string());
}

std::string pair_name(const TypePair& t) { return std::to_string(t.first) + "-" + std::to_string(t.second); }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

// ---- estimate ---------------------------------------------------------

ParameterReport make_parameter_report(const ParameterEstimate& est, const ConstraintSpec& spec,
                                      const SolveResult& result, std::size_t n_samples) {
  ParameterReport r;
  r.beta_mode = to_string(est.mode);
  r.type_labels = spec.type_labels();
  for (int t = 0; t < spec.num_types(); ++t) r.kappa[spec.label(t)] = est.kappa[static_cast<std::size_t>(t)];
  for (int a = 0; a < spec.num_types(); ++a) {
    for (int b = a; b < spec.num_types(); ++b) {
      const auto it = est.beta.find(TypePair(a, b));
      r.beta[spec.pair_label(a, b)] = it == est.beta.end() ? std::nullopt : std::optional<double>(it->second);
    }
  }
  r.converged = result.converged;
  r.inner_all_converged = result.inner_all_converged;
  r.gap = result.gap;
  r.f_star = result.f_star;
  r.p = spec.p();
  r.n_samples = n_samples;
  r.outer_iterations = static_cast<int>(result.outer.size());
  return r;
}

void write_parameter_report_json(const ParameterReport& r, const fs::path& path) {
  json doc;
  doc["kappa"] = r.kappa;
  json beta = json::object();
  for (const auto& [k, v] : r.beta) beta[k] = v ? json(*v) : json(nullptr);
  doc["beta"] = beta;
  doc["converged"] = r.converged;
  doc["gap"] = r.gap;
  doc["F_star"] = r.f_star;
  doc["beta_mode"] = r.beta_mode;
  doc["type_labels"] = r.type_labels;
  doc["inner_all_converged"] = r.inner_all_converged;
  doc["p"] = r.p;
  doc["n_samples"] = r.n_samples;
  doc["outer_iterations"] = r.outer_iterations;
  write_json(doc, path);
}

void write_parameter_report_csv(const ParameterReport& r, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "kind,name,value\n";
  for (const auto& [k, v] : r.kappa) out << "kappa," << k << ',' << fmt(v) << '\n';
  for (const auto& [k, v] : r.beta) out << "beta," << k << ',' << (v ? fmt(*v) : "") << '\n';
  out << "meta,converged," << (r.converged ? "true" : "false") << '\n';
  out << "meta,gap," << fmt(r.gap) << '\n';
  out << "meta,F_star," << fmt(r.f_star) << '\n';
  out << "meta,beta_mode," << r.beta_mode << '\n';
}

ParameterReport read_parameter_report_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const json doc = json::parse(in);
    ParameterReport r;
    r.kappa = doc.at("kappa").get<std::map<std::string, double>>();
    for (const auto& [k, v] : doc.at("beta").items()) {
      r.beta[k] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    }
    r.converged = doc.at("converged").get<bool>();
    r.gap = doc.at("gap").get<double>();
    r.f_star = doc.at("F_star").get<double>();
    r.beta_mode = doc.at("beta_mode").get<std::string>();
    r.type_labels = doc.at("type_labels").get<std::vector<std::string>>();
    r.inner_all_converged = doc.at("inner_all_converged").get<bool>();
    r.p = doc.at("p").get<std::size_t>();
    r.n_samples = doc.at("n_samples").get<std::size_t>();
    r.outer_iterations = doc.at("outer_iterations").get<int>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

EstimateOutcome run_estimate(const RunConfig& config) {
  if (!config.estimate.cell) throw InvalidArgument("estimate needs a supercell file (--cell)");
  const Supercell cell = read_supercell(*config.estimate.cell, config.estimate.box);
  if (!cell.has_all_moments()) {
    std::string missing;
    for (const auto& a : cell.atoms()) {
      if (!a.moment) missing += (missing.empty() ? "" : ",") + std::to_string(a.id);
    }
    throw InvalidArgument("estimate needs a moment for every atom; missing for ids " + missing);
  }
  const ConstraintSpec spec = build_neighbors(cell, config.neighbors);
  Samples raw{1, cell.size(), cell.moments()};
  const CenteredSamples centered = center_by_type(raw, spec.types(), spec.num_types());

  EstimateOutcome out;
  out.result = solve(centered.samples, spec, config.solver.for_dim(spec.p()));
  const ParameterEstimate est = extract_parameters(out.result.y_star, spec, config.estimate.beta_mode);
  out.report = make_parameter_report(est, spec, out.result, raw.n);

  ensure_dir(config.out);
  if (config.format == OutputFormat::json) {
    out.files.push_back(config.out / "report.json");
    write_parameter_report_json(out.report, out.files.back());
  } else {
    out.files.push_back(config.out / "report.csv");
    write_parameter_report_csv(out.report, out.files.back());
  }
  out.files.push_back(config.out / "trace.csv");
  out.result.trace.write_csv(out.files.back());
  out.files.push_back(config.out / "X_star.csv");
  write_matrix_csv(out.result.x_star, out.files.back());
  out.files.push_back(config.out / "Y_star.csv");
  write_matrix_csv(out.result.y_star, out.files.back());
  return out;
}

// ---- simulate ---------------------------------------------------------

SolverConfig study_solver_config(const RunConfig& config, std::size_t p) {
  SolverConfig c = config.solver.for_dim(p);
  if (!config.solver.l_max_set) c.l_max = 100;
  c.record_trace = false;
  return c;
}

GlassoConfig study_glasso_config(const RunConfig& config) {
  GlassoConfig c = config.glasso.config;
  if (!config.glasso.max_sweeps_set) c.max_sweeps = 300;
  if (!config.glasso.stop_tol_set) c.stop_tol = c.kkt_tol;
  return c;
}

std::vector<ReplicateRecord> run_replicate(std::size_t p, int rep, std::uint64_t seed, const RunConfig& config) {
  const auto& methods = config.simulate.methods;
  std::vector<ReplicateRecord> out;
  for (const auto& m : methods) {
    ReplicateRecord r;
    r.method = m;
    r.p = p;
    r.rep = rep;
    r.seed = seed;
    out.push_back(std::move(r));
  }
  auto fail_all = [&](const std::string& msg) {
    for (auto& r : out) {
      r.ok = false;
      r.error = msg;
    }
  };
  try {
    const SimulationTruth truth = generate_simulation_truth(p, config.simulate.density, seed);
    const Samples draw = sample_gaussian(truth.precision, 1, seed ^ 0x9e3779b97f4a7c15ULL);
    const CenteredSamples centered = center_by_type(draw, truth.spec.types(), truth.spec.num_types());
    const SymMatrix s = scatter_matrix(centered.samples);
    std::vector<int> design_label(static_cast<std::size_t>(truth.spec.num_types()));
    for (int t = 0; t < truth.spec.num_types(); ++t) design_label[static_cast<std::size_t>(t)] = std::stoi(truth.spec.label(t));
    auto relabel = [&](const std::map<TypePair, double>& dense) {
      std::map<TypePair, double> b;
      for (const auto& [pair, _] : simulation_beta()) b[pair] = 0.0;
      for (const auto& [pair, v] : dense) {
        b[TypePair(design_label[static_cast<std::size_t>(pair.first)], design_label[static_cast<std::size_t>(pair.second)])] = v;
      }
      return b;
    };
    for (auto& r : out) {
      try {
        if (r.method == "cargo") {
          const SolveResult res = solve_scatter(s, 1, truth.spec, study_solver_config(config, p));
          r.beta_hat = relabel(extract_parameters(res.y_star, truth.spec, BetaMode::raw).beta);
          r.converged = res.converged;
        } else {
          const std::size_t target = truth.offdiag_nnz + p;
          const LambdaTuning tune = tune_lambda_to_sparsity(s, target, study_glasso_config(config),
                                                            config.glasso.max_steps, config.glasso.min_lambda_ratio);
          r.beta_hat = relabel(glasso_mse_extract(tune.fit.x, truth.spec));
          r.converged = tune.fit.converged;
          r.lambda = tune.lambda;
          r.nnz = tune.nnz;
          r.target = target;
        }
        r.ok = true;
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
    }
  } catch (const std::exception& e) {
    fail_all(e.what());
  }
  return out;
}

std::vector<MseRow> compute_mse(const std::vector<ReplicateRecord>& records) {
  const auto truth = simulation_beta();
  std::vector<MseRow> rows;
  auto row_for = [&](const std::string& method, std::size_t p) -> MseRow& {
    for (auto& r : rows) {
      if (r.method == method && r.p == p) return r;
    }
    rows.push_back(MseRow{method, p, 0, 0, 0, {}, {}, 0.0});
    return rows.back();
  };
  // Records are grouped per (method, p) in the order they appear.
  std::map<std::pair<std::string, std::size_t>, std::vector<const ReplicateRecord*>> groups;
  for (const auto& rec : records) {
    MseRow& row = row_for(rec.method, rec.p);
    if (!rec.ok) {
      ++row.failed;
      continue;
    }
    ++row.used;
    if (!rec.converged) ++row.not_converged;
    groups[{rec.method, rec.p}].push_back(&rec);
  }
  for (auto& row : rows) {
    const auto& g = groups[{row.method, row.p}];
    double agg = 0.0;
    for (const auto& [pair, value] : truth) {
      double sum = 0.0;
      std::vector<double> errs;
      errs.reserve(g.size());
      for (const ReplicateRecord* rec : g) {
        const double d = rec->beta_hat.at(pair) - value;
        errs.push_back(d * d);
        sum += d * d;
      }
      const double k = static_cast<double>(g.size());
      const double mse = g.empty() ? std::nan("") : sum / k;
      double se = 0.0;
      if (g.size() > 1) {
        double ss = 0.0;
        for (double e : errs) ss += (e - mse) * (e - mse);
        se = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
      }
      row.mse[pair] = mse;
      row.se[pair] = se;
      agg += mse;
    }
    row.aggregate = agg / static_cast<double>(truth.size());
  }
  return rows;
}

void write_replicates_csv(const std::vector<ReplicateRecord>& records, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "method,p,rep,seed,status,converged,lambda,nnz,target,pair,beta_hat\n";
  for (const auto& r : records) {
    const std::string head = r.method + "," + std::to_string(r.p) + "," + std::to_string(r.rep) + "," +
                             std::to_string(r.seed) + ",";
    if (!r.ok) {
      out << head << "failed,false,,,,,\n";
      continue;
    }
    const std::string tail = std::string(r.converged ? "true" : "false") + "," + fmt(r.lambda) + "," +
                             std::to_string(r.nnz) + "," + std::to_string(r.target) + ",";
    for (const auto& [pair, v] : r.beta_hat) out << head << "ok," << tail << pair_name(pair) << ',' << fmt(v) << '\n';
  }
  if (!out) throw IoError("error writing " + path.string());
}

std::vector<ReplicateRecord> read_replicates_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<ReplicateRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 11) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 11 columns");
    try {
      const std::size_t p = std::stoul(c[1]);
      const int rep = std::stoi(c[2]);
      if (out.empty() || out.back().method != c[0] || out.back().p != p || out.back().rep != rep) {
        ReplicateRecord r;
        r.method = c[0];
        r.p = p;
        r.rep = rep;
        r.seed = std::stoull(c[3]);
        r.ok = c[4] == "ok";
        r.converged = c[5] == "true";
        if (r.ok) {
          r.lambda = std::stod(c[6]);
          r.nnz = std::stoul(c[7]);
          r.target = std::stoul(c[8]);
        }
        out.push_back(std::move(r));
      }
      if (out.back().ok) {
        const auto dash = c[9].find('-');
        out.back().beta_hat[TypePair(std::stoi(c[9].substr(0, dash)), std::stoi(c[9].substr(dash + 1)))] =
            std::stod(c[10]);
      }
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
  }
  return out;
}

MseReport run_simulate(const RunConfig& config) {
  const auto& plan = config.simulate;
  if (plan.dims.empty()) throw InvalidArgument("simulate needs at least one dimension");
  for (std::size_t p : plan.dims) {
    if (p < 6) throw InvalidArgument("simulate: every p must be at least 6");
  }
  if (!(plan.density > 0.0 && plan.density < 0.5)) throw InvalidArgument("simulate: density must lie in (0, 0.5)");
  study_solver_config(config, plan.dims.front()).validate(plan.dims.front(), 1);
  study_glasso_config(config).validate();

  struct Task {
    std::size_t p;
    int rep;
  };
  std::vector<Task> tasks;
  for (std::size_t p : plan.dims) {
    for (int k = 0; k < plan.reps; ++k) tasks.push_back({p, k});
  }
  std::vector<std::vector<ReplicateRecord>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      results[i] = run_replicate(tasks[i].p, tasks[i].rep, config.seed + static_cast<std::uint64_t>(tasks[i].rep), config);
    }
  };
  unsigned n_threads = plan.threads > 0 ? static_cast<unsigned>(plan.threads) : std::thread::hardware_concurrency();
  n_threads = std::clamp<unsigned>(n_threads, 1, static_cast<unsigned>(tasks.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  MseReport report;
  for (auto& group : results) {
    for (auto& r : group) report.replicates.push_back(std::move(r));
  }
  for (const auto& r : report.replicates) {
    if (!r.ok) {
      std::cerr << "warning: " << r.method << " p=" << r.p << " rep=" << r.rep << " failed: " << r.error << '\n';
    }
  }
  report.rows = compute_mse(report.replicates);

  ensure_dir(config.out);
  report.files.push_back(config.out / "replicates.csv");
  write_replicates_csv(report.replicates, report.files.back());
  if (config.format == OutputFormat::csv) {
    report.files.push_back(config.out / "mse_table.csv");
    std::ofstream out(report.files.back());
    if (!out) throw IoError("cannot write " + report.files.back().string());
    out << "method,p,reps_used,failed,not_converged,pair,mse_x100,se_x100\n";
    for (const auto& row : report.rows) {
      const std::string head = row.method + "," + std::to_string(row.p) + "," + std::to_string(row.used) + "," +
                               std::to_string(row.failed) + "," + std::to_string(row.not_converged) + ",";
      for (const auto& [pair, v] : row.mse) {
        out << head << pair_name(pair) << ',' << fmt(100.0 * v) << ',' << fmt(100.0 * row.se.at(pair)) << '\n';
      }
      out << head << "aver," << fmt(100.0 * row.aggregate) << ",\n";
    }
  } else {
    json rows = json::array();
    for (const auto& row : report.rows) {
      json mse = json::object();
      json se = json::object();
      for (const auto& [pair, v] : row.mse) {
        mse[pair_name(pair)] = 100.0 * v;
        se[pair_name(pair)] = 100.0 * row.se.at(pair);
      }
      rows.push_back({{"method", row.method},
                      {"p", row.p},
                      {"reps_used", row.used},
                      {"failed", row.failed},
                      {"not_converged", row.not_converged},
                      {"mse_x100", mse},
                      {"se_x100", se},
                      {"aver_x100", 100.0 * row.aggregate}});
    }
    json truth = json::object();
    for (const auto& [pair, v] : simulation_beta()) truth[pair_name(pair)] = v;
    report.files.push_back(config.out / "mse_report.json");
    write_json({{"seed", config.seed},
                {"reps", plan.reps},
                {"density", plan.density},
                {"beta_truth", truth},
                {"rows", rows}},
               report.files.back());
  }
  return report;
}

// ---- distances --------------------------------------------------------

DistanceReport run_distances(const RunConfig& config) {
  if (!config.estimate.cell) throw InvalidArgument("distances needs a supercell file (--cell)");
  const Supercell cell = read_supercell(*config.estimate.cell, config.estimate.box);
  const ConstraintSpec spec = build_neighbors(cell, config.neighbors);
  DistanceReport rep;
  rep.type_labels = spec.type_labels();
  rep.neighbors.resize(spec.p());
  for (std::size_t i = 0; i < spec.p(); ++i) {
    for (std::size_t j : spec.neighbors(i)) {
      rep.neighbors[i].push_back({j, topo_distance(cell, i, j, config.neighbors.distance_mode)});
    }
    std::stable_sort(rep.neighbors[i].begin(), rep.neighbors[i].end(),
                     [](const NeighborEntry& a, const NeighborEntry& b) { return a.distance < b.distance; });
  }
  for (int a = 0; a < spec.num_types(); ++a) {
    for (int b = a; b < spec.num_types(); ++b) rep.census[spec.pair_label(a, b)] = 0;
  }
  for (std::size_t i = 0; i < spec.p(); ++i) {
    for (std::size_t j : spec.neighbors(i)) {
      if (i < j) ++rep.census[spec.pair_label(spec.type_of(i), spec.type_of(j))];
    }
  }

  ensure_dir(config.out);
  const auto& atoms = cell.atoms();
  if (config.format == OutputFormat::json) {
    json list = json::array();
    for (std::size_t i = 0; i < spec.p(); ++i) {
      json nb = json::array();
      for (const auto& e : rep.neighbors[i]) nb.push_back({{"id", atoms[e.node].id}, {"distance", e.distance}});
      list.push_back({{"id", atoms[i].id}, {"type", atoms[i].type}, {"neighbors", nb}});
    }
    rep.files.push_back(config.out / "neighbors.json");
    write_json({{"type_labels", rep.type_labels}, {"atoms", list}, {"census", rep.census}}, rep.files.back());
  } else {
    rep.files.push_back(config.out / "neighbors.csv");
    std::ofstream out(rep.files.back());
    if (!out) throw IoError("cannot write " + rep.files.back().string());
    out << "id,type,neighbor_id,neighbor_type,distance\n";
    for (std::size_t i = 0; i < spec.p(); ++i) {
      for (const auto& e : rep.neighbors[i]) {
        out << atoms[i].id << ',' << atoms[i].type << ',' << atoms[e.node].id << ',' << atoms[e.node].type << ','
            << fmt(e.distance) << '\n';
      }
    }
    rep.files.push_back(config.out / "census.csv");
    std::ofstream cen(rep.files.back());
    if (!cen) throw IoError("cannot write " + rep.files.back().string());
    cen << "pair,edges\n";
    for (const auto& [k, v] : rep.census) cen << k << ',' << v << '\n';
  }
  return rep;
}

// ---- glasso -----------------------------------------------------------

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    for (const auto& cell : split(line, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      const auto rest = cell.find_first_not_of(" \t\r", used);
      if (used == 0 || rest != std::string::npos) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": row length differs from line 1");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no data");
  return rows;
}

GlassoOutcome run_glasso(const RunConfig& config) {
  const auto& g = config.glasso;
  if (g.matrix.has_value() == g.data.has_value()) {
    throw InvalidArgument("glasso needs exactly one of --matrix or --data");
  }
  SymMatrix s;
  if (g.matrix) {
    s = read_matrix_csv(*g.matrix);
  } else {
    const auto rows = read_numeric_csv(*g.data);
    Samples samples{rows.size(), rows.front().size(), {}};
    for (const auto& r : rows) samples.values.insert(samples.values.end(), r.begin(), r.end());
    s = scatter_matrix(samples);
  }
  GlassoOutcome out;
  json doc;
  if (g.target_nnz) {
    if (g.lambda_set) throw InvalidArgument("glasso takes --lambda or --target-nnz, not both");
    out.tuning = tune_lambda_to_sparsity(s, *g.target_nnz, g.config, g.max_steps, g.min_lambda_ratio);
    out.fit = out.tuning->fit;
    doc["target"] = out.tuning->target;
    doc["nnz_achieved"] = out.tuning->nnz;
    doc["bisection_steps"] = out.tuning->steps;
    doc["target_reached"] = out.tuning->reached;
    doc["warning"] = out.tuning->warning;
  } else {
    if (!g.lambda_set) throw InvalidArgument("glasso needs --lambda or --target-nnz");
    out.fit = glasso(s, g.config);
    doc["nnz_achieved"] = count_nnz(out.fit.x);
  }
  doc["lambda"] = out.fit.lambda;
  doc["ridge"] = out.fit.ridge;
  doc["converged"] = out.fit.converged;
  doc["sweeps"] = out.fit.sweeps;
  doc["objective"] = out.fit.objective;
  doc["kkt_max_violation"] = out.fit.kkt.max_violation;
  doc["kkt_pass"] = out.fit.kkt.pass;
  doc["kkt_tol"] = g.config.kkt_tol;

  ensure_dir(config.out);
  out.files.push_back(config.out / "glasso_X.csv");
  write_matrix_csv(out.fit.x, out.files.back());
  out.files.push_back(config.out / "glasso_report.json");
  write_json(doc, out.files.back());
  return out;
}

}  // namespace cargo
