#pragma once

// Gradient-flow baselines d phi/dt = -P1 (D phi + grad F) used for
// iteration-count comparisons against the block minimizer:
//   sis   semi-implicit Euler, blocks swept in order (Gauss-Seidel)
//   bdf2  second-order backward differentiation, extrapolated nonlinearity
//   sav   scalar auxiliary variable r = sqrt(F + C), all blocks at once
//   ssav  sav plus stabilization S1 (phi' - phi), S2 (phi' - 2 phi + phi_prev)
// sis/bdf2 pick dt from the energy decay rate; sav/ssav from the gap between
// a first-order and a Crank-Nicolson step, rejecting steps that miss tol_ref.

#include <string>

#include "mcpfc/model.hpp"
#include "mcpfc/optimizer.hpp"

namespace mcpfc {

enum class Scheme { sis, bdf2, sav, ssav };
const char* to_string(Scheme s);

struct BaselineOptions {
  Scheme scheme = Scheme::sis;
  double dt_min = 1e-3;
  double dt_max = 0.1;
  double rho = 50.0;
  double tol_ref = 1e-3;
  double C = 1e8;
  double S1 = 0.0;
  double S2 = 0.0;
  bool adaptive = true;  // false: dt_max throughout
  int max_iter = 50000;
  double tol_grad = 1e-7;
  double tol_energy = 1e-14;
  double divergence_floor = -1e12;

  void validate() const;
};

// Per-scheme defaults (sav/ssav use rho 0.9, dt in [1e-5, 1]; ssav S1 = S2 = 10).
BaselineOptions default_baseline_options(Scheme scheme);

State sis_step(const CmshModel& model, const State& state, double dt);

// max(dt_min, dt_max / sqrt(1 + rho e_prime_sq))
double adaptive_dt_pde(double e_prime_sq, double dt_min, double dt_max, double rho);

// (3 phi' - 4 phi + phi_prev) / (2 dt) = -(D phi' + P1 grad F(ext)); ext takes
// already updated blocks at their new value and the others at 2 phi - phi_prev.
State bdf2_step(const CmshModel& model, const State& state, const State& state_prev, double dt);

struct SavStep {
  State state;       // Crank-Nicolson result
  double r = 0.0;
  State first_order;
  double r_first = 0.0;
  double e_est = 0.0;  // |second - first| / |second|
};

// r must be the auxiliary value carried from the previous step (initially
// sqrt(F(state) + C)). state_prev == state on the first step.
SavStep sav_step(const CmshModel& model, const State& state, const State& state_prev, double r,
                 double dt, double C);
SavStep ssav_step(const CmshModel& model, const State& state, const State& state_prev, double r,
                  double dt, double C, double S1, double S2);

// max(dt_min, min(rho sqrt(tol_ref / e) dt, dt_max)); e == 0 gives dt_max.
double adaptive_dt_sav(double e_est, double dt, const BaselineOptions& opts);

// 1/2 sum <phi_j, D_j phi_j> + r^2 - C
double sav_modified_energy(const CmshModel& model, const State& state, double r, double C);

State run_baseline(const CmshModel& model, State state0, const BaselineOptions& opts,
                   RunReport& report, const IterationObserver& observer = {});

}  // namespace mcpfc
