#include "mcpfc/config.hpp"

#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "mcpfc/presets.hpp"

namespace mcpfc {

namespace {

using nlohmann::json;

const json& need(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + key, "missing");
  return obj.at(key);
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  return v.get<double>();
}

long long integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
  return v.get<long long>();
}

std::vector<double> numbers(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> integers(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const long long x = integer(v[i], field + "[" + std::to_string(i) + "]");
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
      throw ConfigError(field, "integer out of range");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

Matrix matrix(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw ConfigError(field, "expected an array of rows");
  Matrix m;
  m.rows = static_cast<int>(v.size());
  for (std::size_t r = 0; r < v.size(); ++r) {
    const auto row = numbers(v[r], field + "[" + std::to_string(r) + "]");
    if (r == 0) m.cols = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != m.cols) throw ConfigError(field, "ragged rows");
    m.data.insert(m.data.end(), row.begin(), row.end());
  }
  return m;
}

void only_keys(const json& obj, const std::set<std::string>& keys, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where.empty() ? "config" : where.substr(0, where.size() - 1),
                                          "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!keys.count(it.key())) throw ConfigError(where + it.key(), "unknown field");
}

GridPtr parse_grid(const json& g) {
  if (g.contains("box_lengths")) {
    only_keys(g, {"mode_counts", "box_lengths"}, "grid.");
    return make_periodic_grid(integers(need(g, "mode_counts", "grid."), "grid.mode_counts"),
                              numbers(g.at("box_lengths"), "grid.box_lengths"));
  }
  only_keys(g, {"n", "d", "mode_counts", "recip_basis", "projection"}, "grid.");
  const int n = static_cast<int>(integer(need(g, "n", "grid."), "grid.n"));
  const int d = static_cast<int>(integer(need(g, "d", "grid."), "grid.d"));
  return make_grid(n, d, integers(need(g, "mode_counts", "grid."), "grid.mode_counts"),
                   matrix(need(g, "recip_basis", "grid."), "grid.recip_basis"),
                   matrix(need(g, "projection", "grid."), "grid.projection"));
}

ModelSpec parse_model(const json& m) {
  only_keys(m, {"s", "q", "c", "tau"}, "model.");
  ModelSpec spec;
  spec.s = static_cast<int>(integer(need(m, "s", "model."), "model.s"));
  spec.q = numbers(need(m, "q", "model."), "model.q");
  if (m.contains("c")) spec.c = number(m.at("c"), "model.c");
  if (m.contains("tau")) {
    const json& t = m.at("tau");
    if (!t.is_array()) throw ConfigError("model.tau", "expected an array of {degrees, value}");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string f = "model.tau[" + std::to_string(i) + "].";
      only_keys(t[i], {"degrees", "value"}, f);
      auto deg = integers(need(t[i], "degrees", f), f + "degrees");
      if (spec.tau.count(deg)) throw ConfigError(f + "degrees", "duplicate monomial");
      spec.tau[std::move(deg)] = number(need(t[i], "value", f), f + "value");
    }
  }
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw ConfigError("model", e.what());
  }
  return spec;
}

State parse_init(const json* init, const GridPtr& grid, int s, std::uint64_t seed) {
  if (!init || init->contains("random")) {
    double amplitude = 0.2, decay = 0.3;
    if (init) {
      only_keys(*init, {"random"}, "init.");
      const json& r = init->at("random");
      only_keys(r, {"amplitude", "decay"}, "init.random.");
      if (r.contains("amplitude")) amplitude = number(r.at("amplitude"), "init.random.amplitude");
      if (r.contains("decay")) decay = number(r.at("decay"), "init.random.decay");
    }
    std::mt19937_64 rng(seed);
    return random_state(grid, s, rng, amplitude, decay);
  }
  only_keys(*init, {"lattice_points", "amplitude"}, "init.");
  const json& pts = need(*init, "lattice_points", "init.");
  if (!pts.is_array() || static_cast<int>(pts.size()) != s)
    throw ConfigError("init.lattice_points", "expected one list of points per component");
  std::vector<std::vector<ModeIndex>> points(s);
  for (int j = 0; j < s; ++j) {
    const std::string f = "init.lattice_points[" + std::to_string(j) + "]";
    if (!pts[j].is_array()) throw ConfigError(f, "expected a list of lattice points");
    for (std::size_t i = 0; i < pts[j].size(); ++i) {
      auto h = integers(pts[j][i], f + "[" + std::to_string(i) + "]");
      if (static_cast<int>(h.size()) != grid->lattice_dim())
        throw ConfigError(f + "[" + std::to_string(i) + "]", "wrong number of indices");
      points[j].push_back(std::move(h));
    }
  }
  const double amplitude = init->contains("amplitude") ? number(init->at("amplitude"), "init.amplitude") : 0.3;
  try {
    return init_from_lattice_points(grid, points, amplitude);
  } catch (const ValidationError& e) {
    throw ConfigError("init.lattice_points", e.what());
  }
}

const std::set<std::string>& solver_keys() {
  static const std::set<std::string> k{"M",        "a",          "b",        "w_bar",
                                       "alpha0",   "alpha_min",  "alpha_max", "sigma",
                                       "eta",      "varsigma",   "schedule",  "T",
                                       "fixed_step", "bb_variant"};
  return k;
}

const std::set<std::string>& baseline_keys() {
  static const std::set<std::string> k{"dt_min", "dt_max", "rho", "tol_ref",
                                       "C",      "S1",     "S2",  "adaptive"};
  return k;
}

const std::set<std::string>& shared_keys() {
  static const std::set<std::string> k{"max_iter", "tol_grad", "tol_energy", "divergence_floor"};
  return k;
}

template <class Opt>
void apply_shared(const json& o, Opt& opt) {
  if (o.contains("max_iter")) opt.max_iter = static_cast<int>(integer(o.at("max_iter"), "options.max_iter"));
  if (o.contains("tol_grad")) opt.tol_grad = number(o.at("tol_grad"), "options.tol_grad");
  if (o.contains("tol_energy")) opt.tol_energy = number(o.at("tol_energy"), "options.tol_energy");
  if (o.contains("divergence_floor"))
    opt.divergence_floor = number(o.at("divergence_floor"), "options.divergence_floor");
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::ab_bpg_2: return "ab-bpg-2";
    case Method::ab_bpg_4: return "ab-bpg-4";
    case Method::sis: return "sis";
    case Method::bdf2: return "bdf2";
    case Method::sav: return "sav";
    case Method::ssav: return "ssav";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::ab_bpg_2, Method::ab_bpg_4, Method::sis, Method::bdf2, Method::sav,
                   Method::ssav})
    if (name == to_string(m)) return m;
  throw ConfigError("method", "unknown method '" + name +
                                  "' (ab-bpg-2, ab-bpg-4, sis, bdf2, sav, ssav)");
}

bool is_baseline(Method m) { return m != Method::ab_bpg_2 && m != Method::ab_bpg_4; }

SolverOptions solver_options_for(const RunConfig& cfg, Method method) {
  if (is_baseline(method)) throw ConfigError("method", "not an ab-bpg method");
  SolverOptions opt = cfg.solver;
  const json& o = cfg.options_raw;
  const auto num = [&](const char* key, double& field) {
    if (o.contains(key)) field = number(o.at(key), std::string("options.") + key);
  };
  if (o.contains("M")) opt.M = static_cast<int>(integer(o.at("M"), "options.M"));
  num("a", opt.a);
  num("b", opt.b);
  num("w_bar", opt.w_bar);
  num("alpha0", opt.alpha0);
  num("alpha_min", opt.alpha_min);
  num("alpha_max", opt.alpha_max);
  num("sigma", opt.sigma);
  num("eta", opt.eta);
  num("varsigma", opt.varsigma);
  if (o.contains("schedule")) {
    const json& s = o.at("schedule");
    if (s == "cyclic") opt.schedule = ScheduleMode::cyclic;
    else if (s == "random") opt.schedule = ScheduleMode::random;
    else throw ConfigError("options.schedule", "expected \"cyclic\" or \"random\"");
  }
  if (o.contains("T")) opt.T = static_cast<int>(integer(o.at("T"), "options.T"));
  if (o.contains("fixed_step") && !o.at("fixed_step").is_null())
    opt.fixed_step = number(o.at("fixed_step"), "options.fixed_step");
  if (o.contains("bb_variant")) {
    const json& b = o.at("bb_variant");
    if (b == "first") opt.bb_variant = BbVariant::first;
    else if (b == "second") opt.bb_variant = BbVariant::second;
    else throw ConfigError("options.bb_variant", "expected \"first\" or \"second\"");
  }
  apply_shared(o, opt);
  opt.schedule_seed = cfg.seed;

  if (method == Method::ab_bpg_2) {
    if (o.contains("a") && opt.a != 0.0) throw ConfigError("options.a", "ab-bpg-2 requires a = 0");
    opt.a = 0.0;
  } else if (!o.contains("a") && opt.a == 0.0) {
    opt.a = 1.0;
  } else if (!(opt.a > 0.0)) {
    throw ConfigError("options.a", "ab-bpg-4 requires a > 0");
  }
  try {
    opt.validate(cfg.model.s);
  } catch (const ValidationError& e) {
    throw ConfigError("options", e.what());
  }
  return opt;
}

BaselineOptions baseline_options_for(const RunConfig& cfg, Method method) {
  if (!is_baseline(method)) throw ConfigError("method", "not a baseline method");
  const Scheme scheme = method == Method::sis    ? Scheme::sis
                        : method == Method::bdf2 ? Scheme::bdf2
                        : method == Method::sav  ? Scheme::sav
                                                 : Scheme::ssav;
  BaselineOptions opt = default_baseline_options(scheme);
  opt.C = cfg.baseline.C;
  const json& o = cfg.options_raw;
  const auto num = [&](const char* key, double& field) {
    if (o.contains(key)) field = number(o.at(key), std::string("options.") + key);
  };
  num("dt_min", opt.dt_min);
  num("dt_max", opt.dt_max);
  num("rho", opt.rho);
  num("tol_ref", opt.tol_ref);
  num("C", opt.C);
  num("S1", opt.S1);
  num("S2", opt.S2);
  if (o.contains("adaptive")) {
    if (!o.at("adaptive").is_boolean()) throw ConfigError("options.adaptive", "expected a boolean");
    opt.adaptive = o.at("adaptive").get<bool>();
  }
  apply_shared(o, opt);
  try {
    opt.validate();
  } catch (const ValidationError& e) {
    throw ConfigError("options", e.what());
  }
  return opt;
}

RunConfig parse_config(const json& doc) {
  only_keys(doc, {"preset", "resolution", "amplitude", "grid", "model", "init", "method", "options",
                  "output", "seed"},
            "");
  RunConfig cfg;
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("seed", "expected a nonnegative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("output")) {
    if (!doc.at("output").is_string()) throw ConfigError("output", "expected a path string");
    cfg.output = doc.at("output").get<std::string>();
  }

  const bool has_preset = doc.contains("preset");
  const bool has_inline = doc.contains("grid") || doc.contains("model") || doc.contains("init");
  if (has_preset == has_inline)
    throw ConfigError("preset", "give exactly one of a preset name or inline grid/model/init");

  if (has_preset) {
    if (!doc.at("preset").is_string()) throw ConfigError("preset", "expected a name");
    cfg.preset = doc.at("preset").get<std::string>();
    if (doc.contains("resolution"))
      cfg.resolution = static_cast<int>(integer(doc.at("resolution"), "resolution"));
    if (doc.contains("amplitude")) cfg.amplitude = number(doc.at("amplitude"), "amplitude");
    Preset p;
    try {
      p = make_preset(cfg.preset, cfg.resolution, cfg.amplitude);
    } catch (const ValidationError& e) {
      throw ConfigError("preset", e.what());
    }
    cfg.resolution = p.resolution;
    cfg.grid = p.grid;
    cfg.model = p.model;
    cfg.init = std::move(p.init);
    cfg.solver = p.solver;
    cfg.baseline = p.baseline;
  } else {
    if (doc.contains("resolution")) throw ConfigError("resolution", "only valid with a preset");
    if (doc.contains("amplitude")) throw ConfigError("amplitude", "only valid with a preset");
    if (!doc.contains("grid")) throw ConfigError("grid", "missing");
    try {
      cfg.grid = parse_grid(doc.at("grid"));
    } catch (const ValidationError& e) {
      throw ConfigError("grid", e.what());
    }
    cfg.model = parse_model(need(doc, "model", ""));
    cfg.init = parse_init(doc.contains("init") ? &doc.at("init") : nullptr, cfg.grid, cfg.model.s,
                          cfg.seed);
  }

  if (doc.contains("method")) {
    if (!doc.at("method").is_string()) throw ConfigError("method", "expected a string");
    cfg.method = parse_method(doc.at("method").get<std::string>());
  }
  if (doc.contains("options")) {
    std::set<std::string> keys = solver_keys();
    keys.insert(baseline_keys().begin(), baseline_keys().end());
    keys.insert(shared_keys().begin(), shared_keys().end());
    only_keys(doc.at("options"), keys, "options.");
    cfg.options_raw = doc.at("options");
  }
  if (is_baseline(cfg.method)) baseline_options_for(cfg, cfg.method);
  else solver_options_for(cfg, cfg.method);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json options_json(const SolverOptions& o) {
  json j;
  j["M"] = o.M;
  j["a"] = o.a;
  j["b"] = o.b;
  j["w_bar"] = o.w_bar;
  j["alpha0"] = o.alpha0;
  j["alpha_min"] = o.alpha_min;
  j["alpha_max"] = o.alpha_max;
  j["sigma"] = o.sigma;
  j["eta"] = o.eta;
  j["varsigma"] = o.varsigma;
  j["schedule"] = o.schedule == ScheduleMode::cyclic ? "cyclic" : "random";
  j["T"] = o.T;
  j["schedule_seed"] = o.schedule_seed;
  j["max_iter"] = o.max_iter;
  j["tol_grad"] = o.tol_grad;
  j["tol_energy"] = o.tol_energy;
  j["fixed_step"] = o.fixed_step ? json(*o.fixed_step) : json(nullptr);
  j["bb_variant"] = o.bb_variant == BbVariant::first ? "first" : "second";
  j["divergence_floor"] = o.divergence_floor;
  return j;
}

json options_json(const BaselineOptions& o) {
  json j;
  j["scheme"] = to_string(o.scheme);
  j["dt_min"] = o.dt_min;
  j["dt_max"] = o.dt_max;
  j["rho"] = o.rho;
  j["tol_ref"] = o.tol_ref;
  j["C"] = o.C;
  j["S1"] = o.S1;
  j["S2"] = o.S2;
  j["adaptive"] = o.adaptive;
  j["max_iter"] = o.max_iter;
  j["tol_grad"] = o.tol_grad;
  j["tol_energy"] = o.tol_energy;
  j["divergence_floor"] = o.divergence_floor;
  return j;
}

json preset_config(const std::string& name, int resolution, double amplitude) {
  const Preset p = make_preset(name, resolution, amplitude);
  const GridSpec& g = *p.grid;
  const auto rows = [](const Matrix& m) {
    json out = json::array();
    for (int r = 0; r < m.rows; ++r) {
      json row = json::array();
      for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
      out.push_back(row);
    }
    return out;
  };
  json doc;
  doc["grid"] = {{"n", g.lattice_dim()},
                 {"d", g.physical_dim()},
                 {"mode_counts", std::vector<int>(g.mode_counts().begin(), g.mode_counts().end())},
                 {"recip_basis", rows(g.recip_basis())},
                 {"projection", rows(g.projection())}};
  json tau = json::array();
  for (const auto& [deg, v] : p.model.tau) tau.push_back({{"degrees", deg}, {"value", v}});
  doc["model"] = {{"s", p.model.s}, {"q", p.model.q}, {"c", p.model.c}, {"tau", tau}};
  json points = json::array();
  for (const auto& f : p.init) {
    json list = json::array();
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f[i] != Complex(0.0, 0.0)) list.push_back(g.mode_index(i));
    points.push_back(list);
  }
  doc["init"] = {{"lattice_points", points}, {"amplitude", amplitude}};
  doc["method"] = p.solver.a > 0.0 ? "ab-bpg-4" : "ab-bpg-2";
  doc["options"] = {{"C", p.baseline.C}};
  if (p.solver.a > 0.0) doc["options"]["a"] = p.solver.a;
  doc["output"] = name + "_out";
  doc["seed"] = 0;
  return doc;
}

}  // namespace mcpfc
