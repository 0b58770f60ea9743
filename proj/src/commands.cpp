#include "mcpfc/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "mcpfc/field_io.hpp"
#include "mcpfc/report.hpp"

namespace mcpfc {

namespace {

nlohmann::json run_options(const RunConfig& cfg, Method method) {
  nlohmann::json j = is_baseline(method) ? options_json(baseline_options_for(cfg, method))
                                         : options_json(solver_options_for(cfg, method));
  j["method"] = to_string(method);
  j["seed"] = cfg.seed;
  if (!cfg.preset.empty()) {
    j["preset"] = cfg.preset;
    j["resolution"] = cfg.resolution;
    j["amplitude"] = cfg.amplitude;
  }
  return j;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct RunArtifacts {
  RunReport report;
  std::string error;
  int status = exit_ok;
};

// Runs one method and writes trajectory.csv/summary.json (and optionally the
// final state) into dir.
RunArtifacts run_into(const RunConfig& cfg, Method method, const std::filesystem::path& dir,
                      bool with_fields, std::ostream* log) {
  RunArtifacts a;
  std::filesystem::create_directories(dir);
  const nlohmann::json options = run_options(cfg, method);
  SolveOutcome out;
  try {
    out = run_method(cfg, method);
  } catch (const ValidationError& e) {
    a.error = e.what();
    a.status = exit_invariant;
    a.report.method = to_string(method);
    a.report.termination = Termination::diverged;
    write_summary(dir / "summary.json", a.report, options);
    return a;
  }
  a.report = std::move(out.report);
  write_trajectory(dir / "trajectory.csv", a.report);
  write_summary(dir / "summary.json", a.report, options);
  if (with_fields && !out.state.empty()) {
    write_field_dump(dir / "final.mcpf", out.state);
    const SliceSpec spec;
    for (std::size_t j = 0; j < out.state.size(); ++j)
      write_text_atomic(dir / ("slice_phi" + std::to_string(j + 1) + ".csv"),
                        density_slice_csv(out.state[j], spec));
  }
  if (a.report.termination == Termination::diverged) a.status = exit_diverged;
  if (log)
    *log << to_string(method) << ": " << to_string(a.report.termination) << " after "
         << a.report.iterations << " iterations, E = " << fmt(a.report.final_energy)
         << ", grad_inf = " << a.report.final_grad_inf << "\n";
  return a;
}

}  // namespace

SolveOutcome run_method(const RunConfig& cfg, Method method) {
  CmshModel model(cfg.model, cfg.grid);
  SolveOutcome out;
  if (is_baseline(method)) {
    const BaselineOptions opt = baseline_options_for(cfg, method);
    out.state = run_baseline(model, cfg.init, opt, out.report);
  } else {
    const SolverOptions opt = solver_options_for(cfg, method);
    out.state = solve(model, cfg.init, opt, out.report);
  }
  return out;
}

int cmd_solve(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log) {
  const RunArtifacts a = run_into(cfg, cfg.method, out, true, &log);
  if (!a.error.empty()) log << "error: " << a.error << "\n";
  return a.status;
}

int cmd_compare(const RunConfig& cfg, const std::vector<std::string>& names,
                const std::filesystem::path& out, int threads, std::ostream& log) {
  std::vector<Method> methods;
  for (const auto& n : names) methods.push_back(parse_method(n));
  if (methods.size() < 2) throw ConfigError("methods", "compare needs at least two methods");
  for (Method m : methods) {
    if (is_baseline(m)) baseline_options_for(cfg, m);
    else solver_options_for(cfg, m);
  }

  std::vector<std::filesystem::path> dirs;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const std::string base = to_string(methods[i]);
    const auto dup = std::count(methods.begin(), methods.end(), methods[i]);
    dirs.push_back(out / (dup > 1 ? base + "_" + std::to_string(i + 1) : base));
  }

  std::vector<RunArtifacts> results(methods.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next++) < methods.size();) {
      try {
        results[i] = run_into(cfg, methods[i], dirs[i], false, nullptr);
      } catch (const std::exception& e) {
        results[i].error = e.what();
        results[i].status = exit_invariant;
      }
    }
  };
  const int n = std::clamp(threads, 1, static_cast<int>(methods.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string csv = "method,iterations,wall_ms,final_energy,final_grad_inf,termination,error\n";
  int status = exit_ok;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const RunArtifacts& a = results[i];
    std::string err = a.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    csv += std::string(to_string(methods[i])) + ',' + std::to_string(a.report.iterations) + ',' +
           fmt(a.report.wall_ms) + ',' + fmt(a.report.final_energy) + ',' +
           fmt(a.report.final_grad_inf) + ',' +
           (a.error.empty() ? to_string(a.report.termination) : "error") + ',' + err + '\n';
    status = std::max(status, a.status);
  }
  std::filesystem::create_directories(out);
  write_text_atomic(out / "compare.csv", csv);
  log << csv;
  return status;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& log, double gradient_scale) {
  CmshModel model(cfg.model, cfg.grid);
  const GradCheckResult r = gradient_check(model, 20, cfg.seed, 1e-5, gradient_scale);
  const bool pass = r.max_rel_error < 1e-6;
  log << "max relative error " << r.max_rel_error << " over " << r.samples << " samples: "
      << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? exit_ok : exit_invariant;
}

int cmd_export(const std::filesystem::path& field, int component, const std::string& slice,
               const std::optional<RunConfig>& cfg, const std::filesystem::path& out,
               std::ostream& log) {
  const SliceSpec spec = parse_slice_spec(slice);
  const FieldDump dump = read_field_dump(field);
  GridPtr grid;
  if (cfg) {
    grid = cfg->grid;
  } else {
    if (dump.n != dump.d)
      throw ConfigError("config", "quasiperiodic dumps need --config for the lattice");
    std::vector<int> counts(dump.mode_counts.begin(), dump.mode_counts.end());
    grid = make_periodic_grid(counts, std::vector<double>(counts.size(), 2.0 * M_PI));
  }
  const auto fields = fields_from_dump(dump, grid);
  if (component < 1 || component > static_cast<int>(fields.size()))
    throw ConfigError("component", "must be in [1, " + std::to_string(fields.size()) + "]");
  write_text_atomic(out, density_slice_csv(fields[component - 1], spec));
  log << "wrote " << out.string() << "\n";
  return exit_ok;
}

int thread_limit_from_env() {
  const char* v = std::getenv("MCPFC_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("MCPFC_THREADS", "expected a positive integer");
  return static_cast<int>(std::min<long>(n, 256));
}

}  // namespace mcpfc
