#pragma once

#include <string>
#include <vector>

#include "mcpfc/baselines.hpp"
#include "mcpfc/model.hpp"
#include "mcpfc/optimizer.hpp"

namespace mcpfc {

struct Preset {
  std::string name;
  int resolution = 0;
  GridPtr grid;
  ModelSpec model;
  State init;
  SolverOptions solver;
  BaselineOptions baseline;  // sis defaults plus preset deltas (C)
};

// dqc_binary, chessboard_quinary, bcc_quinary, lamellar_single
const std::vector<std::string>& preset_names();
int default_resolution(const std::string& name);

// resolution <= 0 picks the default. Throws ValidationError(bad_parameter)
// for unknown names.
Preset make_preset(const std::string& name, int resolution = 0, double amplitude = 0.3);

// Grid for a preset at the given per-dimension mode count.
GridPtr preset_grid(const std::string& name, int resolution);
ModelSpec preset_model(const std::string& name);

ModelSpec dqc_binary_model();
ModelSpec chessboard_quinary_model();
ModelSpec bcc_quinary_model();
ModelSpec lamellar_single_model();
// Shipped without a preset: its initial data is not self-contained.
ModelSpec sigma_ternary_model();

Matrix dqc_projection();

// Component j gets `amplitude` at every listed h and at -h (unless listed);
// DC entries are dropped. Throws ValidationError(out_of_range).
State init_from_lattice_points(const GridPtr& grid,
                               const std::vector<std::vector<ModeIndex>>& points,
                               double amplitude);

// Modes with |h|_inf <= radius whose wavevector norm is within tol of q.
std::vector<ModeIndex> shell_points(const GridSpec& grid, double q, int radius, double tol);

}  // namespace mcpfc
