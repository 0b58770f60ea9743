#include "mcpfc/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mcpfc/simd/kernels.hpp"

namespace mcpfc {

namespace {

ValidationError bad(const std::string& what) {
  return ValidationError(ValidationError::Kind::bad_parameter, what);
}

// One Gauss-Seidel semi-implicit sweep on the workspace's loaded state.
void sis_sweep(const CmshModel& model, ModelWorkspace& ws, State& state, double dt) {
  const auto& k = simd::active_kernels();
  for (int j = 0; j < model.components(); ++j) {
    SpectralField g = ws.bulk_gradient(j);
    SpectralField z(model.grid_ptr());
    k.axpby(1.0, state[j].raw(), -dt, g.raw(), z.raw(), 2 * z.size());
    project_zero_mean_inplace(z);
    k.diag_solve(model.op(j).entries.data(), dt, 1.0, z.raw(), z.raw(), z.size());
    project_zero_mean_inplace(z);
    ws.replace(j, z);
    state[j] = std::move(z);
  }
}

void bdf2_sweep(const CmshModel& model, ModelWorkspace& ws, State& state, const State& prev,
                double dt) {
  const auto& k = simd::active_kernels();
  const int s = model.components();
  State ext(s);
  for (int j = 0; j < s; ++j) ext[j] = extrapolate(state[j], prev[j], 1.0);
  ws.load(ext);
  for (int j = 0; j < s; ++j) {
    SpectralField g = ws.bulk_gradient(j);
    project_zero_mean_inplace(g);
    SpectralField z(model.grid_ptr());
    k.axpby(4.0, state[j].raw(), -1.0, prev[j].raw(), z.raw(), 2 * z.size());
    k.axpby(1.0, z.raw(), -2.0 * dt, g.raw(), z.raw(), 2 * z.size());
    k.diag_solve(model.op(j).entries.data(), 2.0 * dt, 3.0, z.raw(), z.raw(), z.size());
    project_zero_mean_inplace(z);
    ws.replace(j, z);
    state[j] = std::move(z);
  }
}

// Normalized bulk gradients b_j = P1 grad_j F / sqrt(F + C) at the loaded state.
std::vector<SpectralField> sav_directions(ModelWorkspace& ws, int s, double C) {
  const double fc = ws.bulk() + C;
  if (!(fc > 0.0)) throw std::runtime_error("bulk energy + C <= 0; increase C");
  const double scale = 1.0 / std::sqrt(fc);
  std::vector<SpectralField> b;
  for (int j = 0; j < s; ++j) {
    SpectralField g = ws.bulk_gradient(j);
    for (std::size_t h = 0; h < g.size(); ++h) g[h] *= scale;
    project_zero_mean_inplace(g);
    b.push_back(std::move(g));
  }
  return b;
}

// Solves phi' = p + r' q with r' (1 - <b,q>/2) = r + <b, p - phi>/2.
double close_auxiliary(const State& phi, const std::vector<SpectralField>& b, const State& p,
                       const State& q, double r, State& out) {
  double bq = 0.0;
  double bp = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) {
    bq += inner(b[j], q[j]);
    for (std::size_t h = 0; h < phi[j].size(); ++h)
      bp += std::real(std::conj(b[j][h]) * (p[j][h] - phi[j][h]));
  }
  const double r_next = (r + 0.5 * bp) / (1.0 - 0.5 * bq);
  out = p;
  for (std::size_t j = 0; j < phi.size(); ++j)
    for (std::size_t h = 0; h < phi[j].size(); ++h) out[j][h] += r_next * q[j][h];
  return r_next;
}

SavStep sav_core(const CmshModel& model, const State& phi, const State& prev, double r,
                 double dt, double C, double S1, double S2) {
  const int s = model.components();
  const auto& k = simd::active_kernels();
  ModelWorkspace ws(model);
  SavStep out;

  ws.load(phi);
  const auto b = sav_directions(ws, s, C);
  State p(s), q(s);
  for (int j = 0; j < s; ++j) {
    const double* d = model.op(j).entries.data();
    p[j] = SpectralField(model.grid_ptr());
    q[j] = SpectralField(model.grid_ptr());
    k.diag_solve(d, dt, 1.0 + dt * S1, phi[j].raw(), p[j].raw(), phi[j].size());
    k.axpby(1.0 + dt * S1, p[j].raw(), 0.0, p[j].raw(), p[j].raw(), 2 * phi[j].size());
    k.diag_solve(d, dt, 1.0 + dt * S1, b[j].raw(), q[j].raw(), phi[j].size());
    k.axpby(-dt, q[j].raw(), 0.0, q[j].raw(), q[j].raw(), 2 * phi[j].size());
  }
  out.r_first = close_auxiliary(phi, b, p, q, r, out.first_order);

  State bar(s);
  for (int j = 0; j < s; ++j) {
    bar[j] = SpectralField(model.grid_ptr());
    k.axpby(1.5, phi[j].raw(), -0.5, prev[j].raw(), bar[j].raw(), 2 * phi[j].size());
  }
  ws.load(bar);
  const auto bb = sav_directions(ws, s, C);
  for (int j = 0; j < s; ++j) {
    const auto& d = model.op(j).entries;
    for (std::size_t h = 0; h < phi[j].size(); ++h)
      p[j][h] = phi[j][h] * (1.0 - 0.5 * dt * d[h]) +
                dt * S2 * (2.0 * phi[j][h] - prev[j][h]) - 0.5 * dt * r * bb[j][h];
    k.diag_solve(d.data(), 0.5 * dt, 1.0 + dt * S2, p[j].raw(), p[j].raw(), phi[j].size());
    k.diag_solve(d.data(), 0.5 * dt, 1.0 + dt * S2, bb[j].raw(), q[j].raw(), phi[j].size());
    k.axpby(-0.5 * dt, q[j].raw(), 0.0, q[j].raw(), q[j].raw(), 2 * phi[j].size());
  }
  out.r = close_auxiliary(phi, bb, p, q, r, out.state);

  double diff = 0.0;
  double norm = 0.0;
  for (int j = 0; j < s; ++j) {
    project_zero_mean_inplace(out.state[j]);
    project_zero_mean_inplace(out.first_order[j]);
    for (std::size_t h = 0; h < phi[j].size(); ++h) {
      diff += std::norm(out.state[j][h] - out.first_order[j][h]);
      norm += std::norm(out.state[j][h]);
    }
  }
  out.e_est = norm > 0.0 ? std::sqrt(diff / norm) : std::sqrt(diff);
  return out;
}

}  // namespace

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::sis: return "sis";
    case Scheme::bdf2: return "bdf2";
    case Scheme::sav: return "sav";
    case Scheme::ssav: return "ssav";
  }
  return "unknown";
}

void BaselineOptions::validate() const {
  if (!(dt_min > 0.0) || !(dt_min <= dt_max)) throw bad("need 0 < dt_min <= dt_max");
  if (!(rho > 0.0)) throw bad("rho must be > 0");
  if (!(tol_ref > 0.0)) throw bad("tol_ref must be > 0");
  if (!(C > 0.0)) throw bad("C must be > 0");
  if (!(S1 >= 0.0) || !(S2 >= 0.0)) throw bad("S1, S2 must be >= 0");
  if (max_iter < 0) throw bad("max_iter must be >= 0");
  if (!(tol_grad >= 0.0) || !(tol_energy >= 0.0)) throw bad("tolerances must be >= 0");
}

BaselineOptions default_baseline_options(Scheme scheme) {
  BaselineOptions o;
  o.scheme = scheme;
  if (scheme == Scheme::sav || scheme == Scheme::ssav) {
    o.rho = 0.9;
    o.dt_min = 1e-5;
    o.dt_max = 1.0;
  }
  if (scheme == Scheme::ssav) o.S1 = o.S2 = 10.0;
  return o;
}

State sis_step(const CmshModel& model, const State& state, double dt) {
  ModelWorkspace ws(model);
  ws.load(state);
  State out = state;
  sis_sweep(model, ws, out, dt);
  return out;
}

double adaptive_dt_pde(double e_prime_sq, double dt_min, double dt_max, double rho) {
  return std::max(dt_min, dt_max / std::sqrt(1.0 + rho * e_prime_sq));
}

State bdf2_step(const CmshModel& model, const State& state, const State& state_prev, double dt) {
  model.check_state(state);
  model.check_state(state_prev);
  ModelWorkspace ws(model);
  State out = state;
  bdf2_sweep(model, ws, out, state_prev, dt);
  return out;
}

SavStep sav_step(const CmshModel& model, const State& state, const State& state_prev, double r,
                 double dt, double C) {
  return sav_core(model, state, state_prev, r, dt, C, 0.0, 0.0);
}

SavStep ssav_step(const CmshModel& model, const State& state, const State& state_prev, double r,
                  double dt, double C, double S1, double S2) {
  return sav_core(model, state, state_prev, r, dt, C, S1, S2);
}

double adaptive_dt_sav(double e_est, double dt, const BaselineOptions& opts) {
  if (e_est <= 0.0) return opts.dt_max;
  return std::max(opts.dt_min, std::min(opts.rho * std::sqrt(opts.tol_ref / e_est) * dt, opts.dt_max));
}

double sav_modified_energy(const CmshModel& model, const State& state, double r, double C) {
  double e = r * r - C;
  for (int j = 0; j < model.components(); ++j) e += model.quad_energy(j, state[j]);
  return e;
}

State run_baseline(const CmshModel& model, State state, const BaselineOptions& opts,
                   RunReport& report, const IterationObserver& observer) {
  opts.validate();
  model.check_state(state);
  if (!is_feasible(state, 1e-12))
    throw bad("initial state must have zero mean and Hermitian symmetry");

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };
  const bool sav = opts.scheme == Scheme::sav || opts.scheme == Scheme::ssav;

  report = RunReport{};
  report.method = to_string(opts.scheme);

  ModelWorkspace ws(model);
  ws.load(state);
  Residual res = ws.residual();
  double energy_k = ws.energy();
  State prev = state;
  double r = 0.0;
  double dt = opts.adaptive ? (sav ? opts.dt_min : opts.dt_max) : opts.dt_max;
  if (sav) {
    const double fc = ws.bulk() + opts.C;
    if (!(fc > 0.0)) throw bad("C too small: bulk energy + C <= 0 at the initial state");
    r = std::sqrt(fc);
  }

  report.records.push_back({0, 0, energy_k, res.inf_norm, 0.0, false, 0, elapsed_ms()});
  report.termination = Termination::max_iter;
  bool done = false;
  if (res.inf_norm < opts.tol_grad) {
    report.termination = Termination::grad_tol;
    done = true;
  }

  const auto res_norm_sq = [&] {
    double n = 0.0;
    for (const auto& blk : res.blocks) n += norm_sq(blk);
    return n;
  };

  for (int k = 0; !done && k < opts.max_iter; ++k) {
    int rejections = 0;
    double used_dt = dt;
    try {
      if (!sav) {
        if (opts.adaptive) {
          const double e_prime = res_norm_sq();
          dt = adaptive_dt_pde(e_prime * e_prime, opts.dt_min, opts.dt_max, opts.rho);
        }
        used_dt = dt;
        if (opts.scheme == Scheme::bdf2 && k > 0) {
          State next = state;
          bdf2_sweep(model, ws, next, prev, dt);
          prev = std::move(state);
          state = std::move(next);
        } else {
          prev = state;
          sis_sweep(model, ws, state, dt);
        }
      } else {
        SavStep st;
        for (;;) {
          st = sav_core(model, state, prev, r, dt, opts.C, opts.S1, opts.S2);
          if (opts.adaptive && st.e_est > opts.tol_ref && dt > opts.dt_min && rejections < 100) {
            dt = adaptive_dt_sav(st.e_est, dt, opts);
            ++rejections;
            continue;
          }
          break;
        }
        used_dt = dt;
        prev = std::move(state);
        state = std::move(st.state);
        r = st.r;
        if (opts.adaptive) dt = adaptive_dt_sav(st.e_est, dt, opts);
      }
    } catch (const std::runtime_error&) {
      report.termination = Termination::diverged;
      break;
    }

    // The Gauss-Seidel sweep leaves the workspace at the new state.
    if (opts.scheme != Scheme::sis) ws.load(state);
    res = ws.residual();
    const double energy_next = ws.energy();
    IterationRecord rec{k + 1, 0, energy_next, res.inf_norm, used_dt, false, rejections,
                        elapsed_ms()};
    report.records.push_back(rec);
    report.iterations = k + 1;
    if (observer) observer(rec, state);

    if (!std::isfinite(energy_next) || energy_next < opts.divergence_floor) {
      report.termination = Termination::diverged;
      done = true;
    } else if (res.inf_norm < opts.tol_grad) {
      report.termination = Termination::grad_tol;
      done = true;
    } else if (std::abs(energy_next - energy_k) < opts.tol_energy) {
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
