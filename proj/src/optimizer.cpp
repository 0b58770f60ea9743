#include "mcpfc/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mcpfc/simd/kernels.hpp"

namespace mcpfc {

namespace {

ValidationError bad(const std::string& what) {
  return ValidationError(ValidationError::Kind::bad_parameter, what);
}

SpectralField difference(const SpectralField& x, const SpectralField& y) {
  require_same_grid(x, y);
  SpectralField out(x.grid_ptr());
  simd::active_kernels().axpby(1.0, x.raw(), -1.0, y.raw(), out.raw(), 2 * x.size());
  return out;
}

double distance_sq(const SpectralField& x, const SpectralField& y) {
  return norm_sq(difference(x, y));
}

}  // namespace

void SolverOptions::validate(int s) const {
  if (M < 0) throw bad("M must be >= 0");
  if (!(a >= 0.0)) throw bad("a must be >= 0");
  if (!(b > 0.0)) throw bad("b must be > 0");
  if (!(w_bar >= 0.0)) throw bad("w_bar must be >= 0");
  if (!(alpha_min > 0.0) || !(alpha_min <= alpha0) || !(alpha0 <= alpha_max))
    throw bad("need 0 < alpha_min <= alpha0 <= alpha_max");
  if (!(eta > 0.0) || !(eta <= sigma)) throw bad("need 0 < eta <= sigma");
  if (!(varsigma > 0.0 && varsigma < 1.0)) throw bad("varsigma must lie in (0, 1)");
  if (schedule == ScheduleMode::random && T != 0 && T < s) throw bad("T must be >= s");
  if (max_iter < 0) throw bad("max_iter must be >= 0");
  if (!(tol_grad >= 0.0) || !(tol_energy >= 0.0)) throw bad("tolerances must be >= 0");
  if (fixed_step && !(*fixed_step > 0.0)) throw bad("fixed_step must be > 0");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::grad_tol: return "grad_tol";
    case Termination::energy_tol: return "energy_tol";
    case Termination::max_iter: return "max_iter";
    case Termination::diverged: return "diverged";
  }
  return "unknown";
}

BlockSchedule::BlockSchedule(ScheduleMode mode, int s, int T, std::uint64_t seed)
    : mode_(mode), s_(s), T_(T == 0 ? 2 * s : T), rng_(seed), last_(s, -1) {
  if (s < 1) throw bad("schedule needs at least one block");
  if (mode == ScheduleMode::random && T_ < s) throw bad("T must be >= s");
}

int BlockSchedule::next() {
  const long k = static_cast<long>(history_.size());
  int pick = static_cast<int>(k % s_);
  if (mode_ == ScheduleMode::random && s_ > 1) {
    pick = std::uniform_int_distribution<int>(0, s_ - 1)(rng_);
    // Block j must be visited again at or before last_[j] + T. The sampled
    // pick is kept only if the remaining deadlines stay schedulable.
    std::vector<long> deadlines;
    for (int j = 0; j < s_; ++j)
      if (j != pick) deadlines.push_back(last_[j] + T_);
    std::sort(deadlines.begin(), deadlines.end());
    bool feasible = true;
    for (std::size_t r = 0; r < deadlines.size(); ++r)
      if (deadlines[r] < k + 1 + static_cast<long>(r)) feasible = false;
    if (!feasible) {
      long best = std::numeric_limits<long>::max();
      for (int j = 0; j < s_; ++j)
        if (last_[j] + T_ < best) {
          best = last_[j] + T_;
          pick = j;
        }
    }
  }
  last_[pick] = k;
  history_.push_back(pick);
  return pick;
}

SpectralField extrapolate(const SpectralField& x_cur, const SpectralField& x_prev, double w) {
  require_same_grid(x_cur, x_prev);
  if (w == 0.0) return x_cur;
  SpectralField out(x_cur.grid_ptr());
  simd::active_kernels().axpby(1.0 + w, x_cur.raw(), -w, x_prev.raw(), out.raw(),
                               2 * x_cur.size());
  return out;
}

double bb_init_step(const SpectralField& u, const SpectralField& v, double w,
                    const SolverOptions& opts) {
  if (w == 0.0) return opts.alpha0;
  const double uv = inner(u, v);
  const double ratio =
      opts.bb_variant == BbVariant::first ? norm_sq(u) / uv : uv / norm_sq(v);
  if (!std::isfinite(ratio) || ratio <= 0.0) return opts.alpha0;
  return ratio;
}

SpectralField bpg_solve_p2(const DiagonalOperator& D, const SpectralField& psi,
                           const SpectralField& g, double alpha) {
  require_same_grid(psi, g);
  const auto& k = simd::active_kernels();
  SpectralField z(psi.grid_ptr());
  k.axpby(1.0, psi.raw(), -alpha, g.raw(), z.raw(), 2 * psi.size());
  k.diag_solve(D.entries.data(), alpha, 1.0, z.raw(), z.raw(), z.size());
  project_zero_mean_inplace(z);
  return z;
}

RadialSolve solve_radial_fixed_point(const DiagonalOperator& D, const SpectralField& v,
                                     double alpha, double a, double b) {
  const auto& k = simd::active_kernels();
  RadialSolve out;
  const double vv = norm_sq(v);
  if (vv == 0.0) return out;

  double lo = 0.0;
  double hi = vv / (b * b);
  double p = hi;
  for (int it = 1; it <= 100; ++it) {
    double m2, m3;
    k.diag_moments(D.entries.data(), alpha, a * p + b, v.raw(), v.size(), &m2, &m3);
    const double rho = p - m2;
    out.p = p;
    out.iterations = it;
    out.residual = std::abs(rho);
    const double next = p - rho / (1.0 + 2.0 * a * m3);
    if (out.residual <= 1e-12 * (1.0 + p)) {
      // One polishing step, kept only if it helps.
      if (next > 0.0 && next != p) {
        k.diag_moments(D.entries.data(), alpha, a * next + b, v.raw(), v.size(), &m2, &m3);
        if (std::abs(next - m2) < out.residual) {
          out.p = next;
          out.residual = std::abs(next - m2);
        }
      }
      return out;
    }
    (rho < 0.0 ? lo : hi) = p;
    p = (next > lo && next < hi) ? next : 0.5 * (lo + hi);
  }
  throw std::runtime_error("radial fixed point did not converge in 100 iterations");
}

SpectralField bpg_solve_p4(const DiagonalOperator& D, const SpectralField& psi,
                           const SpectralField& g, double alpha, double a, double b) {
  require_same_grid(psi, g);
  const auto& k = simd::active_kernels();
  SpectralField v(psi.grid_ptr());
  k.axpby(a * norm_sq(psi) + b, psi.raw(), -alpha, g.raw(), v.raw(), 2 * psi.size());
  project_zero_mean_inplace(v);
  const RadialSolve r = solve_radial_fixed_point(D, v, alpha, a, b);
  k.diag_solve(D.entries.data(), alpha, a * r.p + b, v.raw(), v.raw(), v.size());
  project_zero_mean_inplace(v);
  return v;
}

SpectralField kernel_update(const DiagonalOperator& D, const SpectralField& psi,
                            const SpectralField& g, double alpha, const SolverOptions& opts) {
  if (opts.a == 0.0) return bpg_solve_p2(D, psi, g, alpha);
  return bpg_solve_p4(D, psi, g, alpha, opts.a, opts.b);
}

LineSearchResult line_search(const DiagonalOperator& D, const SpectralField& psi,
                             const SpectralField& g, double alpha_init, double reference,
                             const std::function<double(const SpectralField&)>& block_energy,
                             const SolverOptions& opts) {
  LineSearchResult out;
  double trial = alpha_init;
  while (trial >= opts.alpha_min) {
    const double alpha = std::min(trial, opts.alpha_max);
    SpectralField z = kernel_update(D, psi, g, alpha, opts);
    const double e = block_energy(z);
    if (reference - e >= opts.eta * distance_sq(psi, z)) {
      out.alpha = alpha;
      out.z = std::move(z);
      out.energy = e;
      return out;
    }
    ++out.backtracks;
    trial *= opts.varsigma;
  }
  out.alpha = opts.alpha_min;
  out.z = kernel_update(D, psi, g, opts.alpha_min, opts);
  out.energy = block_energy(out.z);
  return out;
}

bool restart_check(const std::deque<double>& energy_window, double e_candidate,
                   const SpectralField& x_old, const SpectralField& z, double sigma) {
  const double top = *std::max_element(energy_window.begin(), energy_window.end());
  return top - e_candidate >= sigma * distance_sq(x_old, z);
}

double WeightPolicy::next(bool restarted) {
  if (restarted) {
    t_ = 1.0;
    return 0.0;
  }
  const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_ * t_));
  const double w = std::min((t_ - 1.0) / t_next, w_bar_);
  t_ = t_next;
  return w;
}

State solve(const CmshModel& model, State state, const SolverOptions& opts, RunReport& report,
            const IterationObserver& observer) {
  const int s = model.components();
  opts.validate(s);
  model.check_state(state);
  if (!is_feasible(state, 1e-12))
    throw bad("initial state must have zero mean and Hermitian symmetry");

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };

  const bool fixed = opts.fixed_step.has_value();
  report = RunReport{};
  report.method = opts.a == 0.0 ? "ab-bpg-2" : "ab-bpg-4";

  ModelWorkspace ws(model);
  ws.load(state);
  std::vector<SpectralField> bulk;
  Residual res = ws.residual(&bulk);
  double energy_k = ws.energy();
  State prev = state;
  std::deque<double> window{energy_k};
  WeightPolicy weights(fixed ? 0.0 : opts.w_bar);
  double w = 0.0;
  BlockSchedule schedule(opts.schedule, s, opts.T, opts.schedule_seed);

  report.records.push_back({0, 0, energy_k, res.inf_norm, 0.0, false, 0, elapsed_ms()});
  report.termination = Termination::max_iter;
  bool done = false;
  if (!std::isfinite(energy_k) || energy_k < opts.divergence_floor) {
    report.termination = Termination::diverged;
    done = true;
  } else if (res.inf_norm < opts.tol_grad) {
    report.termination = Termination::grad_tol;
    done = true;
  }

  for (int k = 0; !done && k < opts.max_iter; ++k) {
    const int i = schedule.next();
    const DiagonalOperator& D = model.op(i);

    SpectralField psi = extrapolate(state[i], prev[i], w);
    SpectralField g = w == 0.0 ? bulk[i] : ws.bulk_gradient_with(i, psi);

    LineSearchResult step;
    if (fixed) {
      step.alpha = *opts.fixed_step;
      step.z = kernel_update(D, psi, g, step.alpha, opts);
      step.energy = ws.energy_with(i, step.z);
    } else {
      const double e_psi = w == 0.0 ? energy_k : ws.energy_with(i, psi);
      const double reference =
          std::max(e_psi, *std::max_element(window.begin(), window.end()));
      SpectralField v = difference(g, bulk[i]);
      project_zero_mean_inplace(v);
      const double alpha_init = bb_init_step(difference(psi, state[i]), v, w, opts);
      step = line_search(D, psi, g, alpha_init, reference,
                         [&](const SpectralField& z) { return ws.energy_with(i, z); }, opts);
    }

    const bool accept =
        fixed || restart_check(window, step.energy, state[i], step.z, opts.sigma);
    double energy_next = energy_k;
    if (accept) {
      prev[i] = std::move(state[i]);
      state[i] = std::move(step.z);
      ws.replace(i, state[i]);
      energy_next = step.energy;
      res = ws.residual(&bulk);
    } else {
      // A rejected trial still counts as an update of block i to its old
      // value, so its extrapolation direction is cleared.
      prev[i] = state[i];
    }
    w = fixed ? 0.0 : weights.next(!accept);

    window.push_back(energy_next);
    while (static_cast<int>(window.size()) > opts.M + 1) window.pop_front();

    IterationRecord rec{k + 1, i + 1, energy_next, res.inf_norm, step.alpha, !accept,
                        step.backtracks, elapsed_ms()};
    report.records.push_back(rec);
    report.iterations = k + 1;
    if (observer) observer(rec, state);

    if (!std::isfinite(energy_next) || energy_next < opts.divergence_floor) {
      report.termination = Termination::diverged;
      done = true;
    } else if (res.inf_norm < opts.tol_grad) {
      report.termination = Termination::grad_tol;
      done = true;
    } else if (accept && k + 1 >= s &&
               std::abs(energy_next - report.records[k + 1 - s].energy) < opts.tol_energy) {
      // Compared across one sweep of s block updates, so that a single
      // nearly stationary block does not end the run.
      report.termination = Termination::energy_tol;
      done = true;
    }
    energy_k = energy_next;
  }

  report.final_energy = energy_k;
  report.final_grad_inf = res.inf_norm;
  report.energy_evals = ws.energy_evals();
  report.wall_ms = elapsed_ms();
  return state;
}

}  // namespace mcpfc
