#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcpfc/commands.hpp"
#include "mcpfc/presets.hpp"

using namespace mcpfc;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot open " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
}

RunConfig config_with_overrides(const std::string& path, const std::optional<std::uint64_t>& seed) {
  nlohmann::json doc = read_json(path);
  if (seed && doc.is_object()) doc["seed"] = *seed;
  return parse_config(doc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary states of coupled-mode Swift-Hohenberg models"};
  app.require_subcommand(1);

  std::string config_path, out_dir, field_path, slice = "plane=xy", methods_arg;
  std::optional<std::uint64_t> seed;
  int component = 1;
  double corrupt = 1.0;
  std::string preset_name;
  int resolution = 0;
  double amplitude = 0.3;

  auto* solve = app.add_subcommand("solve", "Run one method and write its artifacts");
  solve->add_option("--config", config_path, "Run configuration (JSON)")->required();
  solve->add_option("--out", out_dir, "Output directory (default: config 'output')");
  solve->add_option("--seed", seed, "Override the config seed");

  auto* compare = app.add_subcommand("compare", "Run several methods from the same start");
  compare->add_option("--config", config_path, "Run configuration (JSON)")->required();
  compare->add_option("--methods", methods_arg, "Comma-separated methods")->required();
  compare->add_option("--out", out_dir, "Output directory (default: config 'output')");
  compare->add_option("--seed", seed, "Override the config seed");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--config", config_path, "Run configuration (JSON)")->required();
  gradcheck->add_option("--seed", seed, "Override the config seed");
  gradcheck->add_option("--corrupt", corrupt)->group("");

  auto* exp = app.add_subcommand("export", "Density slice of a field dump as CSV");
  exp->add_option("--field", field_path, "MCPF field dump")->required();
  exp->add_option("--component", component, "Component, 1-based")->required();
  exp->add_option("--slice", slice, "plane=xy,extent=L,points=N,at=x,cutoff=c");
  exp->add_option("--config", config_path, "Config supplying the lattice");
  exp->add_option("--out", out_dir, "Output CSV (default: <field>_phi<j>.csv)");

  auto* dump = app.add_subcommand("dump-preset", "Print a preset as an editable config");
  dump->add_option("--preset", preset_name, "Preset name")->required();
  dump->add_option("--resolution", resolution, "Modes per dimension (0: preset default)");
  dump->add_option("--amplitude", amplitude, "Seed amplitude");
  dump->add_option("--out", out_dir, "Output file (default: stdout)");

  app.add_subcommand("presets", "List preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    if (*solve) {
      const RunConfig cfg = config_with_overrides(config_path, seed);
      return cmd_solve(cfg, out_dir.empty() ? cfg.output : std::filesystem::path(out_dir), std::cout);
    }
    if (*compare) {
      const RunConfig cfg = config_with_overrides(config_path, seed);
      std::vector<std::string> methods;
      std::stringstream ss(methods_arg);
      for (std::string m; std::getline(ss, m, ',');)
        if (!m.empty()) methods.push_back(m);
      return cmd_compare(cfg, methods, out_dir.empty() ? cfg.output : std::filesystem::path(out_dir),
                         thread_limit_from_env(), std::cout);
    }
    if (*gradcheck) return cmd_gradcheck(config_with_overrides(config_path, seed), std::cout, corrupt);
    if (*exp) {
      std::optional<RunConfig> cfg;
      if (!config_path.empty()) cfg = load_config(config_path);
      std::string out = out_dir;
      if (out.empty())
        out = std::filesystem::path(field_path).replace_extension().string() + "_phi" +
              std::to_string(component) + ".csv";
      return cmd_export(field_path, component, slice, cfg, out, std::cout);
    }
    if (*dump) {
      const std::string text = preset_config(preset_name, resolution, amplitude).dump(2) + "\n";
      if (out_dir.empty()) std::cout << text;
      else std::ofstream(out_dir) << text;
      return exit_ok;
    }
    for (const auto& n : preset_names()) std::cout << n << " (default resolution "
                                                   << default_resolution(n) << ")\n";
    return exit_ok;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  }
}
