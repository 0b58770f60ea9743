#pragma once

// Run artifacts: trajectory.csv (one row per record, shared by every
// method), summary.json, and plot-ready density slices.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcpfc/optimizer.hpp"

namespace mcpfc {

inline constexpr const char* kTrajectoryHeader =
    "iter,block,energy,grad_inf,step,restarted,backtracks,wall_ms";

std::string trajectory_csv(const RunReport& report);
void write_trajectory(const std::filesystem::path& path, const RunReport& report);

nlohmann::json summary_json(const RunReport& report, const nlohmann::json& options);
void write_summary(const std::filesystem::path& path, const RunReport& report,
                   const nlohmann::json& options);

// Writes through a sibling temporary and renames into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

// A square section of physical space through `origin`, spanned by the
// physical axes `axis_u` and `axis_v`, sampled on points x points nodes.
// Coefficients below cutoff * max|c| are skipped in the direct sum.
struct SliceSpec {
  int axis_u = 0;
  int axis_v = 1;
  std::vector<double> origin;  // empty: all zero
  double extent = 0.0;         // <= 0: box length on periodic grids, else 20
  int points = 128;
  double cutoff = 1e-8;
};

// "plane=xy,extent=20,points=128,at=0,cutoff=1e-8"; every key optional.
// `at` sets the origin on the axes off the plane. Throws
// ValidationError(bad_parameter).
SliceSpec parse_slice_spec(const std::string& text);

// Rows "x,y,value" (in-plane coordinates) with a header line.
// One-dimensional fields use y = 0 throughout.
std::string density_slice_csv(const SpectralField& field, const SliceSpec& spec);

}  // namespace mcpfc
