#include "mcpfc/presets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcpfc {

namespace {

ValidationError bad(const std::string& what) {
  return ValidationError(ValidationError::Kind::bad_parameter, what);
}

using Tau = std::map<std::vector<int>, double>;

// Symmetric keys for a binary or quinary model written as pairs.
void put(Tau& tau, std::vector<int> deg, double v) { tau[std::move(deg)] = v; }

std::vector<int> unit(int s, int j, int power) {
  std::vector<int> d(s, 0);
  d[j] = power;
  return d;
}

// Every h in the box with |h|_inf <= radius, in flat order.
template <class F>
void for_each_small_mode(const GridSpec& grid, int radius, F&& f) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ModeIndex h = grid.mode_index(i);
    bool small = true;
    for (int x : h) small = small && std::abs(x) <= radius;
    if (small) f(i, h);
  }
}

// Reciprocal vectors of the body-centred lattice (h1 + h2 + h3 even) whose
// norm is closest to q.
std::vector<ModeIndex> bcc_shell(const GridSpec& grid, double q) {
  double best = std::numeric_limits<double>::infinity();
  for_each_small_mode(grid, 4, [&](std::size_t i, const ModeIndex& h) {
    if ((h[0] + h[1] + h[2]) % 2 != 0 || i == 0) return;
    best = std::min(best, std::abs(std::sqrt(grid.wave_norm_sq(i)) - q));
  });
  std::vector<ModeIndex> pts;
  for_each_small_mode(grid, 4, [&](std::size_t i, const ModeIndex& h) {
    if ((h[0] + h[1] + h[2]) % 2 != 0 || i == 0) return;
    if (std::abs(std::sqrt(grid.wave_norm_sq(i)) - q) <= best + 1e-12) pts.push_back(h);
  });
  return pts;
}

}  // namespace

Matrix dqc_projection() {
  const double pi = M_PI;
  return Matrix(2, 4,
                {1.0, std::cos(pi / 5), std::cos(2 * pi / 5), std::cos(3 * pi / 5),  //
                 0.0, std::sin(pi / 5), std::sin(2 * pi / 5), std::sin(3 * pi / 5)});
}

ModelSpec dqc_binary_model() {
  ModelSpec m;
  m.s = 2;
  m.c = 20.0;
  m.q = {1.0, 2.0 * std::cos(M_PI / 5)};
  put(m.tau, {0, 2}, -0.1);
  put(m.tau, {2, 0}, -0.1);
  put(m.tau, {0, 3}, -0.3);
  put(m.tau, {3, 0}, -0.3);
  put(m.tau, {1, 2}, -2.2);
  put(m.tau, {2, 1}, -2.2);
  for (auto d : {std::vector<int>{0, 4}, {4, 0}, {1, 1}, {2, 2}, {1, 3}, {3, 1}}) put(m.tau, d, 1.0);
  return m;
}

ModelSpec sigma_ternary_model() {
  ModelSpec m;
  m.s = 3;
  m.c = 1.0;
  m.q = {1.0, 1.0, 1.0};
  for (int j = 0; j < 3; ++j) {
    put(m.tau, unit(3, j, 2), -0.2);
    put(m.tau, unit(3, j, 3), -0.3);
    put(m.tau, unit(3, j, 4), 0.1);
  }
  put(m.tau, {2, 1, 1}, -0.1);
  put(m.tau, {1, 2, 1}, -0.1);
  put(m.tau, {1, 1, 2}, -0.1);
  return m;
}

ModelSpec chessboard_quinary_model() {
  ModelSpec m;
  m.s = 5;
  m.c = 10.0;
  m.q = {1.0, 1.0, 1.0, 1.0, 1.0};
  for (int j = 0; j < 5; ++j) {
    put(m.tau, unit(5, j, 3), -0.10);
    put(m.tau, unit(5, j, 4), 0.10);
  }
  put(m.tau, {1, 0, 1, 0, 0}, -0.70);
  put(m.tau, {0, 1, 0, 1, 1}, 0.05);
  put(m.tau, {1, 1, 0, 0, 1}, -0.12);
  put(m.tau, {0, 1, 0, 1, 0}, -0.44);
  return m;
}

ModelSpec bcc_quinary_model() {
  ModelSpec m;
  m.s = 5;
  m.c = 1.0;
  m.q = {1.0, 1.5, 2.0, 2.5, 3.0};
  const double cubic[5] = {-0.1, -0.6, -0.4, -0.2, -0.1};
  for (int j = 0; j < 5; ++j) {
    put(m.tau, unit(5, j, 3), cubic[j]);
    put(m.tau, unit(5, j, 4), 0.1);
  }
  put(m.tau, {1, 0, 1, 0, 0}, 0.4);
  put(m.tau, {0, 1, 0, 1, 0}, 0.3);
  put(m.tau, {0, 1, 1, 1, 0}, -0.2);
  put(m.tau, {1, 1, 0, 0, 1}, 0.8);
  return m;
}

ModelSpec lamellar_single_model() {
  ModelSpec m;
  m.s = 1;
  m.c = 1.0;
  m.q = {1.0};
  put(m.tau, {2}, -0.1);
  put(m.tau, {4}, 1.0);
  return m;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"dqc_binary", "chessboard_quinary", "bcc_quinary",
                                              "lamellar_single"};
  return names;
}

int default_resolution(const std::string& name) {
  if (name == "dqc_binary") return 24;
  if (name == "chessboard_quinary") return 256;
  if (name == "bcc_quinary") return 48;
  if (name == "lamellar_single") return 32;
  throw bad("unknown preset '" + name + "'");
}

ModelSpec preset_model(const std::string& name) {
  if (name == "dqc_binary") return dqc_binary_model();
  if (name == "chessboard_quinary") return chessboard_quinary_model();
  if (name == "bcc_quinary") return bcc_quinary_model();
  if (name == "lamellar_single") return lamellar_single_model();
  throw bad("unknown preset '" + name + "'");
}

GridPtr preset_grid(const std::string& name, int n) {
  if (name == "dqc_binary") return make_grid(4, 2, {n, n, n, n}, Matrix::identity(4), dqc_projection());
  if (name == "chessboard_quinary") return make_periodic_grid({n, n}, {2 * M_PI, 2 * M_PI});
  if (name == "bcc_quinary") {
    const double L = 2.0 * std::sqrt(2.0) * M_PI;
    return make_periodic_grid({n, n, n}, {L, L, L});
  }
  if (name == "lamellar_single") return make_periodic_grid({n}, {2 * M_PI});
  throw bad("unknown preset '" + name + "'");
}

std::vector<ModeIndex> shell_points(const GridSpec& grid, double q, int radius, double tol) {
  std::vector<ModeIndex> pts;
  for_each_small_mode(grid, radius, [&](std::size_t i, const ModeIndex& h) {
    if (std::abs(std::sqrt(grid.wave_norm_sq(i)) - q) <= tol) pts.push_back(h);
  });
  return pts;
}

State init_from_lattice_points(const GridPtr& grid,
                               const std::vector<std::vector<ModeIndex>>& points,
                               double amplitude) {
  State state;
  for (const auto& set : points) {
    SpectralField phi(grid);
    for (const ModeIndex& h : set) {
      if (!grid->contains(h))
        throw ValidationError(ValidationError::Kind::out_of_range,
                              "initial lattice point outside the mode box");
      phi.at(h) = amplitude;
    }
    // Conjugate partners of listed points that were not listed themselves.
    for (const ModeIndex& h : set) {
      ModeIndex neg(h.size());
      for (std::size_t l = 0; l < h.size(); ++l) neg[l] = -h[l];
      if (grid->contains(neg)) phi.at(neg) = amplitude;
    }
    symmetrize_hermitian(phi);
    project_zero_mean_inplace(phi);
    state.push_back(std::move(phi));
  }
  return state;
}

Preset make_preset(const std::string& name, int resolution, double amplitude) {
  Preset p;
  p.name = name;
  p.resolution = resolution > 0 ? resolution : default_resolution(name);
  p.model = preset_model(name);
  p.grid = preset_grid(name, p.resolution);
  p.baseline = default_baseline_options(Scheme::sis);

  std::vector<std::vector<ModeIndex>> pts;
  if (name == "dqc_binary") {
    for (double q : p.model.q) pts.push_back(shell_points(*p.grid, q, 2, 1e-9));
    p.solver.a = 1.0;
    p.baseline.C = 1e8;
  } else if (name == "chessboard_quinary") {
    pts = {{{1, 0}, {-1, 0}}, {{0, 1}, {0, -1}}, {{2, 0}, {-2, 0}}, {{0, 2}, {0, -2}}, {{0, 0}}};
  } else if (name == "bcc_quinary") {
    for (double q : p.model.q) pts.push_back(bcc_shell(*p.grid, q));
  } else {
    pts = {{{1}, {-1}}};
  }
  p.init = init_from_lattice_points(p.grid, pts, amplitude);
  return p;
}

}  // namespace mcpfc
