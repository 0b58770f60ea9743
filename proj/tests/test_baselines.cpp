#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mcpfc/baselines.hpp"
#include "mcpfc/presets.hpp"

namespace {

using namespace mcpfc;

ModelSpec linear_model(double tau2) {
  ModelSpec m;
  m.s = 1;
  m.q = {1.0};
  m.c = 1.0;
  if (tau2 != 0.0) m.tau = {{{2}, tau2}};
  return m;
}

double max_diff(const State& a, const State& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    for (std::size_t i = 0; i < a[j].size(); ++i) d = std::max(d, std::abs(a[j][i] - b[j][i]));
  return d;
}

State converged_lamellar(const CmshModel& model, const State& init) {
  SolverOptions o;
  o.tol_grad = 1e-10;
  o.tol_energy = 0.0;
  RunReport rep;
  State x = solve(model, init, o, rep);
  EXPECT_EQ(rep.termination, Termination::grad_tol);
  return x;
}

TEST(SisStep, NoBulkIsDiagonalDecay) {
  auto g = make_periodic_grid({16, 16}, {10.0, 10.0});
  CmshModel model(linear_model(0.0), g);
  std::mt19937_64 rng(1);
  const State x = random_state(g, 1, rng);
  const State y = sis_step(model, x, 0.2);
  for (std::size_t i = 0; i < g->size(); ++i)
    EXPECT_NEAR(std::abs(y[0][i] - x[0][i] / (1.0 + 0.2 * model.op(0).entries[i])), 0.0, 1e-15);
}

TEST(SisStep, ConvexQuadraticContracts) {
  auto g = make_periodic_grid({16}, {2 * M_PI});
  CmshModel model(linear_model(0.3), g);
  std::mt19937_64 rng(2);
  State x = random_state(g, 1, rng);
  double prev = norm_sq(x[0]);
  for (int k = 0; k < 20; ++k) {
    x = sis_step(model, x, 0.1);
    const double now = norm_sq(x[0]);
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(AdaptiveDtPde, Examples) {
  EXPECT_EQ(adaptive_dt_pde(0.0, 1e-3, 0.1, 50.0), 0.1);
  EXPECT_NEAR(adaptive_dt_pde(1.0, 1e-3, 0.1, 50.0), 0.1 / std::sqrt(51.0), 1e-17);
  EXPECT_NEAR(adaptive_dt_pde(1.0, 1e-3, 0.1, 50.0), 0.0140, 1e-4);
  EXPECT_EQ(adaptive_dt_pde(1e12, 1e-3, 0.1, 50.0), 1e-3);
}

TEST(Bdf2Step, NoBulkMatchesScalarRecurrence) {
  auto g = make_periodic_grid({16}, {2 * M_PI});
  CmshModel model(linear_model(0.0), g);
  std::mt19937_64 rng(3);
  const State x = random_state(g, 1, rng);
  const double dt = 0.05;
  const State y = bdf2_step(model, x, x, dt);
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double d = model.op(0).entries[i];
    // (3 y - 4 x + x) / (2 dt) = -d y
    EXPECT_NEAR(std::abs(y[0][i] - 3.0 * x[0][i] / (3.0 + 2.0 * dt * d)), 0.0, 1e-15);
  }
}

TEST(Bdf2Step, SecondOrderOnLinearModel) {
  auto g = make_periodic_grid({16}, {2 * M_PI});
  const double tau2 = 0.2;
  CmshModel model(linear_model(tau2), g);
  State x0 = init_from_lattice_points(g, {{{1}, {2}, {3}}}, 0.3);
  const double T = 1.0;
  std::vector<double> dts{0.1, 0.05, 0.025, 0.0125}, errs;
  for (double dt : dts) {
    const int steps = static_cast<int>(std::lround(T / dt));
    State prev = x0;
    State cur = sis_step(model, x0, dt);
    for (int k = 1; k < steps; ++k) {
      State next = bdf2_step(model, cur, prev, dt);
      prev = std::move(cur);
      cur = std::move(next);
    }
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double lambda = model.op(0).entries[i] + 2.0 * tau2;
      err = std::max(err, std::abs(cur[0][i] - x0[0][i] * std::exp(-lambda * T)));
    }
    errs.push_back(err);
  }
  // Least-squares slope of log(err) against log(dt).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const double lx = std::log(dts[i]), ly = std::log(errs[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_GE(slope, 1.8);
  EXPECT_LE(slope, 2.2);
}

TEST(Bdf2Step, SteadyStateIsFixedPoint) {
  const Preset p = make_preset("lamellar_single");
  CmshModel model(p.model, p.grid);
  const State x = converged_lamellar(model, p.init);
  EXPECT_LT(max_diff(bdf2_step(model, x, x, 0.05), x), 1e-12);
  EXPECT_LT(max_diff(sis_step(model, x, 0.05), x), 1e-12);
}

TEST(AdaptiveDtSav, Examples) {
  BaselineOptions o = default_baseline_options(Scheme::sav);
  EXPECT_EQ(o.rho, 0.9);
  EXPECT_EQ(o.tol_ref, 1e-3);
  EXPECT_NEAR(adaptive_dt_sav(o.tol_ref, 0.01, o), 0.009, 1e-15);
  EXPECT_EQ(adaptive_dt_sav(0.0, 0.01, o), o.dt_max);
  EXPECT_EQ(adaptive_dt_sav(1e-30, 0.01, o), o.dt_max);
  EXPECT_EQ(adaptive_dt_sav(1e6, 0.01, o), o.dt_min);
  const BaselineOptions s = default_baseline_options(Scheme::ssav);
  EXPECT_EQ(s.S1, 10.0);
  EXPECT_EQ(s.S2, 10.0);
  EXPECT_EQ(s.dt_min, 1e-5);
  EXPECT_EQ(s.dt_max, 1.0);
}

TEST(SavStep, ModifiedEnergyDecreases) {
  const Preset p = make_preset("dqc_binary", 8);
  CmshModel model(p.model, p.grid);
  ModelWorkspace ws(model);
  ws.load(p.init);
  const double C = 1.0;
  double r = std::sqrt(ws.bulk() + C);
  State prev = p.init, cur = p.init;
  double e = sav_modified_energy(model, cur, r, C);
  for (int k = 0; k < 40; ++k) {
    SavStep st = sav_step(model, cur, prev, r, 0.01, C);
    const double e_next = sav_modified_energy(model, st.state, st.r, C);
    EXPECT_LE(e_next, e + 1e-12 * (1.0 + std::abs(e)));
    EXPECT_TRUE(is_feasible(st.state, 1e-12));
    prev = std::move(cur);
    cur = std::move(st.state);
    r = st.r;
    e = e_next;
  }
}

TEST(SavStep, ZeroStabilizationMatchesPlainSav) {
  const Preset p = make_preset("dqc_binary", 8);
  CmshModel model(p.model, p.grid);
  ModelWorkspace ws(model);
  ws.load(p.init);
  const double r = std::sqrt(ws.bulk() + 1e8);
  const SavStep a = sav_step(model, p.init, p.init, r, 0.05, 1e8);
  const SavStep b = ssav_step(model, p.init, p.init, r, 0.05, 1e8, 0.0, 0.0);
  EXPECT_LE(max_diff(a.state, b.state), 1e-12);
  EXPECT_EQ(a.r, b.r);
  const SavStep c = ssav_step(model, p.init, p.init, r, 0.05, 1e8, 10.0, 10.0);
  EXPECT_GT(max_diff(a.state, c.state), 0.0);
}

TEST(SavStep, SteadyStateIsFixedPoint) {
  const Preset p = make_preset("lamellar_single");
  CmshModel model(p.model, p.grid);
  const State x = converged_lamellar(model, p.init);
  ModelWorkspace ws(model);
  ws.load(x);
  const double r = std::sqrt(ws.bulk() + 1.0);
  const SavStep a = sav_step(model, x, x, r, 0.1, 1.0);
  EXPECT_LT(max_diff(a.state, x), 1e-11);
  EXPECT_NEAR(a.r, r, 1e-12);
  const SavStep b = ssav_step(model, x, x, r, 0.1, 1.0, 10.0, 10.0);
  EXPECT_LT(max_diff(b.state, x), 1e-11);
}

TEST(RunBaseline, ConvexModelGoesToZeroForEveryScheme) {
  auto g = make_periodic_grid({16, 16}, {10.0, 10.0});
  CmshModel model(linear_model(0.1), g);
  std::mt19937_64 rng(4);
  const State x0 = random_state(g, 1, rng);
  for (Scheme s : {Scheme::sis, Scheme::bdf2, Scheme::sav, Scheme::ssav}) {
    BaselineOptions o = default_baseline_options(s);
    o.C = 1.0;
    RunReport rep;
    const State x = run_baseline(model, x0, o, rep);
    EXPECT_NE(rep.termination, Termination::diverged) << to_string(s);
    EXPECT_NE(rep.termination, Termination::max_iter) << to_string(s);
    EXPECT_LT(max_abs(x[0]), 1e-5) << to_string(s);
    EXPECT_EQ(rep.method, to_string(s));
    for (const auto& rec : rep.records) {
      EXPECT_GE(rec.step, rec.iter == 0 ? 0.0 : o.dt_min);
      EXPECT_LE(rec.step, o.dt_max);
    }
  }
}

TEST(RunBaseline, RejectsTooSmallAuxiliaryConstant) {
  auto g = make_periodic_grid({16}, {2 * M_PI});
  CmshModel model(linear_model(-0.5), g);
  const State x0 = init_from_lattice_points(g, {{{1}}}, 0.3);
  ModelWorkspace ws(model);
  ws.load(x0);
  ASSERT_LT(ws.bulk(), 0.0);
  BaselineOptions o = default_baseline_options(Scheme::sav);
  o.max_iter = 3;
  o.C = 1e-3 - ws.bulk();
  RunReport rep;
  EXPECT_NO_THROW(run_baseline(model, x0, o, rep));
  o.C = 1e-9;
  EXPECT_THROW(run_baseline(model, x0, o, rep), ValidationError);
  o.C = 0.0;
  EXPECT_THROW(run_baseline(model, x0, o, rep), ValidationError);
}

}  // namespace
