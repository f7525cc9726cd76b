#include "cargo/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace cargo {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ParseError(where + ": expected a table");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ParseError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
bool read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return false;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + "." + key + ": wrong type");
  }
  return true;
}

std::size_t read_count(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ParseError(where + ": expected a nonnegative integer");
  return v.get<std::size_t>();
}

void resolve_path(json& obj, const char* key, const std::filesystem::path& base) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string()) return;
  const std::filesystem::path p = obj.at(key).get<std::string>();
  if (p.is_relative()) obj[key] = (base / p).string();
}

void parse_solver(const json& j, SolverSettings& s) {
  const std::string w = "solver";
  reject_unknown(j, w, {"nu", "scale_b", "eps_floor", "gamma0", "eta", "k_max", "inner_tol_scale",
                        "inner_tol_base", "l_max", "gap_tol", "record_trace"});
  auto& c = s.config;
  if (j.contains("nu")) {
    double v = 0;
    read(j, "nu", v, w);
    c.nu = v;
  }
  if (j.contains("scale_b")) {
    const auto& b = j.at("scale_b");
    if (b.is_number()) {
      s.scale_b.scalar = b.get<double>();
    } else if (b.is_string()) {
      s.scale_b.path = b.get<std::string>();
    } else {
      throw ParseError("solver.scale_b: expected a number or a matrix CSV path");
    }
  }
  read(j, "eps_floor", c.eps_floor, w);
  read(j, "gamma0", c.gamma0, w);
  read(j, "eta", c.eta, w);
  read(j, "k_max", c.k_max, w);
  read(j, "inner_tol_scale", c.inner_tol_scale, w);
  read(j, "inner_tol_base", c.inner_tol_base, w);
  s.l_max_set = read(j, "l_max", c.l_max, w);
  read(j, "gap_tol", c.gap_tol, w);
  read(j, "record_trace", c.record_trace, w);
}

void parse_neighbors(const json& j, NeighborPolicy& n) {
  const std::string w = "neighbors";
  reject_unknown(j, w, {"mode", "rel_tol", "distance_mode"});
  std::string text;
  if (read(j, "mode", text, w)) n = parse_neighbor_mode(text, n);
  read(j, "rel_tol", n.rel_tol, w);
  if (read(j, "distance_mode", text, w)) n.distance_mode = parse_distance_mode(text);
  n.validate();
}

void parse_estimate(const json& j, EstimateSettings& e) {
  const std::string w = "estimate";
  reject_unknown(j, w, {"cell", "box", "beta_mode"});
  std::string text;
  if (read(j, "cell", text, w)) e.cell = text;
  if (j.contains("box")) {
    std::vector<double> box;
    read(j, "box", box, w);
    if (box.size() != 3) throw ParseError("estimate.box: expected three lengths");
    e.box = std::array<double, 3>{box[0], box[1], box[2]};
  }
  if (read(j, "beta_mode", text, w)) e.beta_mode = parse_beta_mode(text);
}

void parse_simulate(const json& j, SimulateSettings& s) {
  const std::string w = "simulate";
  reject_unknown(j, w, {"p", "reps", "density", "methods", "threads"});
  if (j.contains("p")) {
    const auto& dims = j.at("p");
    if (!dims.is_array() || dims.empty()) throw ParseError("simulate.p: expected a nonempty list");
    s.dims.clear();
    for (const auto& d : dims) s.dims.push_back(read_count(d, "simulate.p"));
  }
  read(j, "reps", s.reps, w);
  read(j, "density", s.density, w);
  read(j, "methods", s.methods, w);
  read(j, "threads", s.threads, w);
  if (s.reps < 1) throw InvalidArgument("simulate.reps must be at least 1");
  if (s.threads < 0) throw InvalidArgument("simulate.threads must be nonnegative");
  for (const auto& m : s.methods) {
    if (m != "cargo" && m != "glasso") throw InvalidArgument("simulate.methods: unknown method '" + m + "'");
  }
  if (s.methods.empty()) throw InvalidArgument("simulate.methods must not be empty");
}

void parse_glasso(const json& j, GlassoSettings& g) {
  const std::string w = "glasso";
  reject_unknown(j, w, {"lambda", "target_nnz", "matrix", "data", "max_sweeps", "kkt_tol", "inner_tol",
                        "max_inner", "stop_tol", "sweep_tol", "ridge_scale", "max_steps", "min_lambda_ratio"});
  auto& c = g.config;
  g.lambda_set = read(j, "lambda", c.lambda, w);
  if (j.contains("target_nnz")) g.target_nnz = read_count(j.at("target_nnz"), "glasso.target_nnz");
  std::string text;
  if (read(j, "matrix", text, w)) g.matrix = text;
  if (read(j, "data", text, w)) g.data = text;
  g.max_sweeps_set = read(j, "max_sweeps", c.max_sweeps, w);
  read(j, "kkt_tol", c.kkt_tol, w);
  read(j, "inner_tol", c.inner_tol, w);
  read(j, "max_inner", c.max_inner, w);
  g.stop_tol_set = read(j, "stop_tol", c.stop_tol, w);
  read(j, "sweep_tol", c.sweep_tol, w);
  read(j, "ridge_scale", c.ridge_scale, w);
  read(j, "max_steps", g.max_steps, w);
  read(j, "min_lambda_ratio", g.min_lambda_ratio, w);
}

}  // namespace

std::optional<SymMatrix> ScaleSpec::materialize(std::size_t p) const {
  if (path) {
    SymMatrix b = read_matrix_csv(*path);
    if (b.dim() != p) throw DimensionMismatch("prior scale matrix has the wrong dimension");
    return b;
  }
  if (scalar) {
    if (!(*scalar > 0.0)) throw InvalidArgument("solver.scale_b must be positive");
    return SymMatrix::identity(p) * *scalar;
  }
  return std::nullopt;
}

SolverConfig SolverSettings::for_dim(std::size_t p) const {
  SolverConfig c = config;
  c.scale_b = scale_b.materialize(p);
  return c;
}

NeighborPolicy parse_neighbor_mode(const std::string& text, NeighborPolicy base) {
  if (text == "first-shell") {
    base.mode = NeighborPolicy::Mode::first_shell;
    return base;
  }
  if (text.rfind("k:", 0) == 0) {
    const std::string num = text.substr(2);
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (num.empty() || used != num.size() || k < 1) {
      throw InvalidArgument("neighbor mode '" + text + "': expected k:<c> with c >= 1");
    }
    base.mode = NeighborPolicy::Mode::k_nearest;
    base.k = k;
    return base;
  }
  throw InvalidArgument("neighbor mode '" + text + "': expected first-shell or k:<c>");
}

DistanceMode parse_distance_mode(const std::string& text) {
  if (text == "min-image") return DistanceMode::minimum_image;
  if (text == "paper6") return DistanceMode::paper6;
  throw InvalidArgument("distance mode '" + text + "': expected min-image or paper6");
}

BetaMode parse_beta_mode(const std::string& text) {
  if (text == "car") return BetaMode::car;
  if (text == "raw") return BetaMode::raw;
  throw InvalidArgument("beta mode '" + text + "': expected car or raw");
}

OutputFormat parse_format(const std::string& text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  throw InvalidArgument("format '" + text + "': expected csv or json");
}

std::string to_string(BetaMode mode) { return mode == BetaMode::car ? "car" : "raw"; }

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::string& overrides_json) {
  json doc = json::object();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw IoError("cannot open config file " + file->string());
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(file->string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError(file->string() + ": expected a JSON object");
    const auto base = std::filesystem::absolute(*file).parent_path();
    if (doc.contains("estimate")) resolve_path(doc["estimate"], "cell", base);
    if (doc.contains("glasso")) {
      resolve_path(doc["glasso"], "matrix", base);
      resolve_path(doc["glasso"], "data", base);
    }
    if (doc.contains("solver")) resolve_path(doc["solver"], "scale_b", base);
  }
  if (!overrides_json.empty()) {
    json patch;
    try {
      patch = json::parse(overrides_json);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("overrides: ") + e.what());
    }
    doc.merge_patch(patch);
  }

  RunConfig cfg;
  reject_unknown(doc, "config", {"seed", "out", "format", "solver", "neighbors", "estimate", "simulate", "glasso"});
  if (doc.contains("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_integer() || s.get<long long>() < 0) throw ParseError("seed: expected a nonnegative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  std::string text;
  if (read(doc, "out", text, "config")) cfg.out = text;
  if (read(doc, "format", text, "config")) cfg.format = parse_format(text);
  if (doc.contains("solver")) parse_solver(doc.at("solver"), cfg.solver);
  if (doc.contains("neighbors")) parse_neighbors(doc.at("neighbors"), cfg.neighbors);
  if (doc.contains("estimate")) parse_estimate(doc.at("estimate"), cfg.estimate);
  if (doc.contains("simulate")) parse_simulate(doc.at("simulate"), cfg.simulate);
  if (doc.contains("glasso")) parse_glasso(doc.at("glasso"), cfg.glasso);
  return cfg;
}

}  // namespace cargo
