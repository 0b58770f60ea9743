#pragma once

// Adaptive block Bregman proximal gradient (AB-BPG) minimization of the
// coupled-mode energy over zero-mean states.
//
// One iteration updates a single block i:
//   psi = (1 + w) x_i - w x_i^prev                      extrapolation
//   z   = argmin <g, z - psi> + D_h(z, psi) / alpha + 1/2 <z, D_i z>
//                                                      kernel update
// with g = grad_i F at (psi, x_{!=i}) and h the Bregman kernel
//   h(x) = a/4 |x|^4 + b/2 |x|^2    (a = 0: plain quadratic, closed form).
// The step alpha comes from a Barzilai-Borwein guess and a nonmonotone
// backtracking search; z is accepted only if it decreases the maximum of
// the last M+1 energies by sigma |x_i - z|^2, otherwise the iterate is kept
// and the extrapolation weight is reset.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mcpfc/model.hpp"

namespace mcpfc {

enum class ScheduleMode { cyclic, random };
enum class BbVariant { first, second };

struct SolverOptions {
  int M = 0;
  double a = 0.0;
  double b = 1.0;
  double w_bar = 1.0;
  double alpha0 = 0.1;
  double alpha_min = 1e-6;
  double alpha_max = 10.0;
  double sigma = 1e-12;
  double eta = 1e-12;
  double varsigma = 0.6180339887498949;
  ScheduleMode schedule = ScheduleMode::cyclic;
  int T = 0;  // random schedule window; 0 means 2 s
  std::uint64_t schedule_seed = 0;
  int max_iter = 20000;
  double tol_grad = 1e-7;
  double tol_energy = 1e-14;
  std::optional<double> fixed_step;
  BbVariant bb_variant = BbVariant::first;
  double divergence_floor = -1e12;

  // Throws ValidationError(bad_parameter).
  void validate(int s) const;
};

enum class Termination { grad_tol, energy_tol, max_iter, diverged };
const char* to_string(Termination t);

struct IterationRecord {
  int iter = 0;
  int block = 0;  // 1-based; 0 for the initial record
  double energy = 0.0;
  double grad_inf = 0.0;
  double step = 0.0;
  bool restarted = false;
  int backtracks = 0;
  double wall_ms = 0.0;
};

struct RunReport {
  std::string method;
  std::vector<IterationRecord> records;
  double final_energy = 0.0;
  double final_grad_inf = 0.0;
  int iterations = 0;
  Termination termination = Termination::max_iter;
  long energy_evals = 0;
  double wall_ms = 0.0;
};

// Block picks. Random mode samples uniformly but overrides a pick whenever
// it would leave some block without a visit in a window of T consecutive
// picks (earliest-deadline rule), so every such window covers all blocks.
class BlockSchedule {
 public:
  BlockSchedule(ScheduleMode mode, int s, int T, std::uint64_t seed);

  int next();  // 0-based
  const std::vector<int>& history() const { return history_; }

 private:
  ScheduleMode mode_;
  int s_;
  int T_;
  std::mt19937_64 rng_;
  std::vector<long> last_;
  std::vector<int> history_;
};

// (1 + w) x_cur - w x_prev
SpectralField extrapolate(const SpectralField& x_cur, const SpectralField& x_prev, double w);

// u = psi - x_i, v = grad_i F(psi) - grad_i F(x). Returns alpha0 when w == 0
// or when the ratio is not a positive finite number.
double bb_init_step(const SpectralField& u, const SpectralField& v, double w,
                    const SolverOptions& opts);

// (alpha D + I)^{-1} (psi - alpha P1 g), DC set to zero.
SpectralField bpg_solve_p2(const DiagonalOperator& D, const SpectralField& psi,
                           const SpectralField& g, double alpha);

struct RadialSolve {
  double p = 0.0;
  int iterations = 0;
  double residual = 0.0;  // |p - r(p)|
};

// Root of p = sum_h |v_h|^2 / (alpha d_h + a p + b)^2. Newton from |v|^2/b^2
// with a bisection fallback on [0, |v|^2/b^2]. Throws std::runtime_error
// if 100 iterations do not reach 1e-12 (1 + p).
RadialSolve solve_radial_fixed_point(const DiagonalOperator& D, const SpectralField& v,
                                     double alpha, double a, double b);

// [alpha D + (a p* + b) I]^{-1} v with v = (a |psi|^2 + b) psi - alpha P1 g.
SpectralField bpg_solve_p4(const DiagonalOperator& D, const SpectralField& psi,
                           const SpectralField& g, double alpha, double a, double b);

// Dispatches on opts.a (P2 when 0).
SpectralField kernel_update(const DiagonalOperator& D, const SpectralField& psi,
                            const SpectralField& g, double alpha, const SolverOptions& opts);

struct LineSearchResult {
  double alpha = 0.0;
  SpectralField z;
  double energy = 0.0;  // E(z, x_{!=i})
  int backtracks = 0;
};

// Tries alpha_l = min(varsigma^l alpha_init, alpha_max), l = 0, 1, ... while
// alpha_l >= alpha_min, accepting the first with
//   reference - E(z_l) >= eta |psi - z_l|^2.
// Falls back to alpha_min (not tested) when none passes.
LineSearchResult line_search(const DiagonalOperator& D, const SpectralField& psi,
                             const SpectralField& g, double alpha_init, double reference,
                             const std::function<double(const SpectralField&)>& block_energy,
                             const SolverOptions& opts);

bool restart_check(const std::deque<double>& energy_window, double e_candidate,
                   const SpectralField& x_old, const SpectralField& z, double sigma);

// Nesterov t-sequence capped at w_bar, reset by restarts.
class WeightPolicy {
 public:
  explicit WeightPolicy(double w_bar) : w_bar_(w_bar) {}
  double next(bool restarted);

 private:
  double w_bar_;
  double t_ = 1.0;
};

// Optional per-iteration observer; receives the state after the iteration.
using IterationObserver = std::function<void(const IterationRecord&, const State&)>;

State solve(const CmshModel& model, State state0, const SolverOptions& opts, RunReport& report,
            const IterationObserver& observer = {});

}  // namespace mcpfc
