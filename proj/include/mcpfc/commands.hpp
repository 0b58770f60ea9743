#pragma once

// Batch commands behind the mcpfc executable. Each returns a process exit
// status and reports to the given streams.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mcpfc/config.hpp"

namespace mcpfc {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_diverged = 3, exit_invariant = 4 };

struct SolveOutcome {
  RunReport report;
  State state;
};

// Runs the configured method from cfg.init; no files are written.
SolveOutcome run_method(const RunConfig& cfg, Method method);

// trajectory.csv, summary.json, final.mcpf and slice_<j>.csv under `out`.
int cmd_solve(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

// Every method from the same initial state; compare.csv plus one
// subdirectory of run artifacts per method. `threads` caps concurrent runs.
int cmd_compare(const RunConfig& cfg, const std::vector<std::string>& methods,
                const std::filesystem::path& out, int threads, std::ostream& log);

// Finite-difference check of the configured model's gradient on 20 random
// states; passes below 1e-6. gradient_scale != 1 corrupts the analytic side.
int cmd_gradcheck(const RunConfig& cfg, std::ostream& log, double gradient_scale = 1.0);

// Writes the slice CSV of one component (1-based) of a field dump. The
// lattice comes from `cfg` when given; otherwise the dump must be periodic
// (n == d) and is read on the 2 pi box.
int cmd_export(const std::filesystem::path& field, int component, const std::string& slice,
               const std::optional<RunConfig>& cfg, const std::filesystem::path& out,
               std::ostream& log);

// Worker cap from MCPFC_THREADS (default 1).
int thread_limit_from_env();

}  // namespace mcpfc
