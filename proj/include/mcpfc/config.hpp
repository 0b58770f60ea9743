#pragma once

// JSON run configuration. Field reference: schema/run_config.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mcpfc/baselines.hpp"
#include "mcpfc/optimizer.hpp"

namespace mcpfc {

// Names the offending field, e.g. "options.alpha_min: must be > 0".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Method { ab_bpg_2, ab_bpg_4, sis, bdf2, sav, ssav };
const char* to_string(Method m);
// Throws ConfigError("method", ...).
Method parse_method(const std::string& name);
bool is_baseline(Method m);

struct RunConfig {
  std::string preset;  // empty for inline problems
  int resolution = 0;
  double amplitude = 0.3;
  GridPtr grid;
  ModelSpec model;
  State init;
  Method method = Method::ab_bpg_2;
  SolverOptions solver;
  BaselineOptions baseline;
  nlohmann::json options_raw = nlohmann::json::object();
  std::filesystem::path output = "mcpfc_out";
  std::uint64_t seed = 0;
};

// Throws ConfigError for malformed or inconsistent documents.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

// Options for `method` on this problem: preset defaults overlaid with the
// "options" object. The method argument lets compare reuse one config.
SolverOptions solver_options_for(const RunConfig& cfg, Method method);
BaselineOptions baseline_options_for(const RunConfig& cfg, Method method);

// Options actually used, as written into summary.json.
nlohmann::json options_json(const SolverOptions& o);
nlohmann::json options_json(const BaselineOptions& o);

// Self-contained inline config reproducing a preset.
nlohmann::json preset_config(const std::string& name, int resolution, double amplitude);

}  // namespace mcpfc
