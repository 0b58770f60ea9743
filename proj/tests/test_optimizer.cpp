#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "mcpfc/baselines.hpp"
#include "mcpfc/optimizer.hpp"
#include "mcpfc/presets.hpp"
#include "oracles.hpp"

namespace {

using namespace mcpfc;

const double kGolden = 0.6180339887498949;

GridPtr square(int n) { return make_periodic_grid({n, n}, {4.0 * M_PI, 4.0 * M_PI}); }

SpectralField random_field(const GridPtr& g, std::mt19937_64& rng, double amp = 1.0) {
  return random_state(g, 1, rng, amp, 0.0)[0];
}

oracle::Vec to_vec(const SpectralField& f) { return {f.coeffs().begin(), f.coeffs().end()}; }

ModelSpec test_binary() {
  ModelSpec m;
  m.s = 2;
  m.q = {1.0, 1.4};
  m.c = 1.0;
  m.tau = {{{2, 0}, -0.2}, {{0, 2}, -0.1}, {{3, 0}, -0.3}, {{1, 2}, -0.5},
           {{4, 0}, 1.0},  {{0, 4}, 1.0},  {{2, 2}, 0.5}};
  return m;
}

TEST(BlockSchedule, Cyclic) {
  BlockSchedule c(ScheduleMode::cyclic, 2, 0, 0);
  EXPECT_EQ(c.next(), 0);
  EXPECT_EQ(c.next(), 1);
  EXPECT_EQ(c.next(), 0);
  BlockSchedule one(ScheduleMode::random, 1, 0, 3);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(one.next(), 0);
}

TEST(BlockSchedule, RandomWindowsCoverAllBlocks) {
  for (int s : {2, 3, 5}) {
    for (int T : {s, s + 1, 10}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        BlockSchedule b(ScheduleMode::random, s, T, seed);
        for (int k = 0; k < 400; ++k) b.next();
        const auto& h = b.history();
        for (std::size_t start = 0; start + T <= h.size(); ++start) {
          std::set<int> seen(h.begin() + start, h.begin() + start + T);
          ASSERT_EQ(static_cast<int>(seen.size()), s) << "s=" << s << " T=" << T;
        }
      }
    }
  }
}

TEST(BlockSchedule, RandomIsNotCyclic) {
  BlockSchedule b(ScheduleMode::random, 3, 10, 1);
  bool deviates = false;
  for (int k = 0; k < 60; ++k) deviates = deviates || b.next() != k % 3;
  EXPECT_TRUE(deviates);
}

TEST(Extrapolate, Examples) {
  auto g = square(8);
  std::mt19937_64 rng(1);
  const SpectralField u = random_field(g, rng);
  const SpectralField x = random_field(g, rng);
  SpectralField two_u(g);
  for (std::size_t i = 0; i < u.size(); ++i) two_u[i] = 2.0 * u[i];
  const SpectralField y = extrapolate(two_u, u, 0.5);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(std::abs(y[i] - 2.5 * u[i]), 0.0, 1e-15);
  const SpectralField same = extrapolate(x, x, 0.7);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(std::abs(same[i] - x[i]), 0.0, 1e-15);
  const SpectralField none = extrapolate(x, u, 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(none[i], x[i]);
}

TEST(BbInitStep, Examples) {
  auto g = make_periodic_grid({4}, {2 * M_PI});
  SolverOptions o;
  SpectralField u(g), v(g);
  u[1] = 1.0;
  v[1] = 2.0;
  EXPECT_EQ(bb_init_step(u, v, 0.0, o), o.alpha0);
  EXPECT_DOUBLE_EQ(bb_init_step(u, v, 0.3, o), 0.5);
  o.bb_variant = BbVariant::second;
  EXPECT_DOUBLE_EQ(bb_init_step(u, v, 0.3, o), 0.5);
  EXPECT_DOUBLE_EQ(bb_init_step(u, u, 0.3, o), 1.0);
  v[1] = -2.0;
  EXPECT_EQ(bb_init_step(u, v, 0.3, o), o.alpha0);
  EXPECT_EQ(bb_init_step(SpectralField(g), SpectralField(g), 0.3, o), o.alpha0);
}

TEST(BpgP2, DecoupledQuadratic) {
  auto g = square(8);
  const auto D = build_diag_operator(g, 1.0, 1.0);
  std::mt19937_64 rng(2);
  const SpectralField psi = random_field(g, rng);
  const SpectralField z = bpg_solve_p2(D, psi, SpectralField(g), 0.3);
  EXPECT_EQ(z[0], Complex(0.0, 0.0));
  for (std::size_t i = 1; i < z.size(); ++i)
    EXPECT_NEAR(std::abs(z[i] - psi[i] / (1.0 + 0.3 * D.entries[i])), 0.0, 1e-15);
}

TEST(BpgP4, TrivialAndDegenerateLimits) {
  auto g = square(8);
  const auto D = build_diag_operator(g, 1.0, 1.0);
  const SpectralField zero(g);
  EXPECT_EQ(max_abs(bpg_solve_p4(D, zero, zero, 0.5, 1.0, 1.0)), 0.0);

  std::mt19937_64 rng(3);
  const SpectralField psi = random_field(g, rng);
  const SpectralField grad = random_field(g, rng);
  const SpectralField p2 = bpg_solve_p2(D, psi, grad, 0.4);
  const SpectralField p4 = bpg_solve_p4(D, psi, grad, 0.4, 1e-13, 1.0);
  for (std::size_t i = 0; i < psi.size(); ++i) EXPECT_NEAR(std::abs(p2[i] - p4[i]), 0.0, 1e-10);
}

TEST(RadialFixedPoint, Examples) {
  auto g = make_periodic_grid({4}, {2 * M_PI});
  DiagonalOperator zeroD{g, std::vector<double>(4, 0.0)};
  SpectralField v(g);
  v[1] = Complex(std::sqrt(2.0), 0.0);
  v[3] = Complex(std::sqrt(2.0), 0.0);  // |v|^2 = 4
  EXPECT_NEAR(solve_radial_fixed_point(zeroD, v, 0.7, 1.0, 1.0).p, 1.0, 1e-12);
  EXPECT_EQ(solve_radial_fixed_point(zeroD, SpectralField(g), 0.7, 1.0, 1.0).p, 0.0);
}

// Subproblem optimality against the projected-gradient oracle.
TEST(KernelUpdate, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto g = square(8);
  for (int inst = 0; inst < 20; ++inst) {
    const auto D = build_diag_operator(g, 0.5 + U(rng), 0.5 + U(rng));
    const SpectralField psi = random_field(g, rng, 0.5);
    const SpectralField grad = random_field(g, rng, 0.5);
    const double alpha = 0.01 + U(rng);
    const double a = 0.2 + 2.0 * U(rng);
    const double b = 0.5 + U(rng);

    const auto ref2 = oracle::bregman_subproblem(D.entries, to_vec(psi), to_vec(grad), alpha, 0.0, 1.0);
    const SpectralField z2 = bpg_solve_p2(D, psi, grad, alpha);
    for (std::size_t i = 0; i < z2.size(); ++i) ASSERT_NEAR(std::abs(z2[i] - ref2[i]), 0.0, 1e-8);

    const auto ref4 = oracle::bregman_subproblem(D.entries, to_vec(psi), to_vec(grad), alpha, a, b);
    const SpectralField z4 = bpg_solve_p4(D, psi, grad, alpha, a, b);
    for (std::size_t i = 0; i < z4.size(); ++i) ASSERT_NEAR(std::abs(z4[i] - ref4[i]), 0.0, 1e-8);
  }
}

TEST(RadialFixedPoint, MatchesBisection) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto g = square(8);
  for (int inst = 0; inst < 30; ++inst) {
    const auto D = build_diag_operator(g, 0.5 + U(rng), 0.5 + U(rng));
    const SpectralField v = random_field(g, rng, 3.0 * U(rng));
    const double alpha = 0.01 + U(rng), a = 0.1 + 3.0 * U(rng), b = 0.2 + U(rng);
    const RadialSolve r = solve_radial_fixed_point(D, v, alpha, a, b);
    const auto rho = [&](double p) {
      double sum = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double den = alpha * D.entries[i] + a * p + b;
        sum += std::norm(v[i]) / (den * den);
      }
      return p - sum;
    };
    EXPECT_LE(std::abs(rho(r.p)), 1e-12 * (1.0 + r.p));
    const double ref = oracle::bisect(rho, 0.0, norm_sq(v) / (b * b), 1e-14);
    EXPECT_NEAR(r.p, ref, 1e-11 * (1.0 + ref));
  }
}

TEST(LineSearch, AcceptsFirstTrialAndClamps) {
  auto g = square(8);
  const auto D = build_diag_operator(g, 1.0, 1.0);
  std::mt19937_64 rng(7);
  const SpectralField psi = random_field(g, rng);
  const SpectralField grad = random_field(g, rng);
  SolverOptions o;
  const auto r = line_search(D, psi, grad, 50.0, 1.0, [](const SpectralField&) { return 0.0; }, o);
  EXPECT_EQ(r.backtracks, 0);
  EXPECT_EQ(r.alpha, o.alpha_max);
  const SpectralField z = bpg_solve_p2(D, psi, grad, o.alpha_max);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_EQ(r.z[i], z[i]);
}

TEST(LineSearch, BacktracksGeometrically) {
  auto g = square(8);
  const auto D = build_diag_operator(g, 1.0, 1.0);
  std::mt19937_64 rng(8);
  const SpectralField psi = random_field(g, rng);
  const SpectralField grad = random_field(g, rng);
  SolverOptions o;
  int calls = 0;
  const auto r = line_search(D, psi, grad, 0.1, 1.0,
                             [&](const SpectralField&) { return ++calls <= 2 ? 5.0 : 0.0; }, o);
  EXPECT_EQ(r.backtracks, 2);
  EXPECT_NEAR(r.alpha, 0.1 * kGolden * kGolden, 1e-15);
  EXPECT_NEAR(r.alpha, 0.0382, 1e-4);

  const auto fail = line_search(D, psi, grad, 0.1, 1.0, [](const SpectralField&) { return 5.0; }, o);
  EXPECT_EQ(fail.alpha, o.alpha_min);
  EXPECT_EQ(fail.energy, 5.0);
}

TEST(RestartCheck, Examples) {
  auto g = square(8);
  std::mt19937_64 rng(9);
  const SpectralField x = random_field(g, rng);
  SpectralField z = x;
  z[1] += 1e-4;
  z[z.grid().conjugate_index(1)] += 1e-4;
  EXPECT_TRUE(restart_check({0.0, 0.005}, 0.0, x, z, 1e-12));
  EXPECT_FALSE(restart_check({0.0}, 0.1, x, z, 1e-12));
  EXPECT_FALSE(restart_check({1.0}, 1.0, x, z, 1e-12));
  EXPECT_TRUE(restart_check({1.0}, 1.0, x, x, 1e-12));
}

TEST(WeightPolicy, Examples) {
  WeightPolicy w(1.0);
  EXPECT_EQ(w.next(false), 0.0);
  const double w2 = w.next(false);
  EXPECT_GT(w2, 0.0);
  EXPECT_LT(w2, 1.0);
  EXPECT_GT(w.next(false), w2);
  EXPECT_EQ(w.next(true), 0.0);
  EXPECT_EQ(w.next(false), 0.0);
  WeightPolicy capped(0.0);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(capped.next(false), 0.0);
}

TEST(Solve, ConvexModelGoesToZero) {
  ModelSpec m;
  m.s = 1;
  m.q = {1.0};
  m.tau = {{{2}, 0.1}};
  auto g = square(16);
  CmshModel model(m, g);
  std::mt19937_64 rng(1);
  RunReport rep;
  const State x = solve(model, random_state(g, 1, rng), SolverOptions{}, rep);
  EXPECT_EQ(rep.termination, Termination::grad_tol);
  EXPECT_LT(max_abs(x[0]), 1e-6);
  EXPECT_NEAR(rep.final_energy, 0.0, 1e-12);
}

struct Trace {
  std::vector<IterationRecord> recs;
  std::vector<State> states;
};

Trace traced_solve(const CmshModel& model, const State& x0, const SolverOptions& o) {
  Trace t;
  t.states.push_back(x0);
  RunReport rep;
  solve(model, x0, o, rep, [&](const IterationRecord& r, const State& s) {
    t.recs.push_back(r);
    t.states.push_back(s);
  });
  t.recs.insert(t.recs.begin(), rep.records.front());
  return t;
}

TEST(Solve, MonotoneFeasibleAndRestartSemantics) {
  auto g = make_periodic_grid({32, 32}, {4 * M_PI, 4 * M_PI});
  CmshModel model(test_binary(), g);
  std::mt19937_64 rng(21);
  const State x0 = random_state(g, 2, rng, 0.3);
  SolverOptions o;
  o.max_iter = 300;
  const Trace t = traced_solve(model, x0, o);
  int restarts = 0;
  for (std::size_t k = 1; k < t.recs.size(); ++k) {
    const double prev = t.recs[k - 1].energy;
    EXPECT_LE(t.recs[k].energy, prev + 1e-12 * (1.0 + std::abs(prev)));
    EXPECT_TRUE(is_feasible(t.states[k], 1e-12));
    if (t.recs[k].restarted) {
      ++restarts;
      for (int j = 0; j < 2; ++j)
        for (std::size_t i = 0; i < g->size(); ++i) ASSERT_EQ(t.states[k][j][i], t.states[k - 1][j][i]);
    }
  }
  EXPECT_LT(t.recs.back().grad_inf, t.recs.front().grad_inf);
  (void)restarts;
}

TEST(Solve, WindowedDissipation) {
  auto g = make_periodic_grid({32, 32}, {4 * M_PI, 4 * M_PI});
  CmshModel model(test_binary(), g);
  std::mt19937_64 rng(22);
  SolverOptions o;
  o.M = 5;
  o.a = 1.0;
  o.max_iter = 300;
  const Trace t = traced_solve(model, random_state(g, 2, rng, 0.3), o);
  double last_max = t.recs.front().energy;
  for (std::size_t k = 1; k < t.recs.size(); ++k) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = k >= 5 ? k - 5 : 0; j <= k; ++j) m = std::max(m, t.recs[j].energy);
    EXPECT_LE(m, last_max + 1e-12 * (1.0 + std::abs(last_max)));
    last_max = m;
  }
}

TEST(Solve, RandomScheduleCoverage) {
  auto g = make_periodic_grid({16, 16}, {4 * M_PI, 4 * M_PI});
  ModelSpec m = test_binary();
  CmshModel model(m, g);
  std::mt19937_64 rng(23);
  SolverOptions o;
  o.schedule = ScheduleMode::random;
  o.T = 3;
  o.schedule_seed = 99;
  o.max_iter = 200;
  o.tol_grad = 0.0;
  o.tol_energy = 0.0;
  RunReport rep;
  solve(model, random_state(g, 2, rng, 0.3), o, rep);
  std::vector<int> blocks;
  for (std::size_t k = 1; k < rep.records.size(); ++k) blocks.push_back(rep.records[k].block);
  for (std::size_t s = 0; s + 3 <= blocks.size(); ++s)
    ASSERT_EQ(std::set<int>(blocks.begin() + s, blocks.begin() + s + 3).size(), 2u);
}

TEST(Solve, FixedStepMatchesSemiImplicitSweeps) {
  const Preset p = make_preset("lamellar_single");
  CmshModel model(p.model, p.grid);
  SolverOptions o;
  o.fixed_step = 0.05;
  o.w_bar = 0.0;
  o.max_iter = 100;
  o.tol_grad = 0.0;
  o.tol_energy = 0.0;
  const Trace t = traced_solve(model, p.init, o);
  ASSERT_EQ(t.states.size(), 101u);
  State x = p.init;
  for (int k = 1; k <= 100; ++k) {
    x = sis_step(model, x, 0.05);
    for (std::size_t i = 0; i < x[0].size(); ++i)
      ASSERT_LE(std::abs(x[0][i] - t.states[k][0][i]), 1e-12) << "iteration " << k;
  }
}

TEST(Solve, RejectsInfeasibleStart) {
  auto g = square(8);
  CmshModel model(test_binary(), g);
  std::mt19937_64 rng(1);
  State x = random_state(g, 2, rng);
  x[0][0] = 0.5;
  RunReport rep;
  EXPECT_THROW(solve(model, x, SolverOptions{}, rep), ValidationError);
  SolverOptions bad;
  bad.eta = 1.0;
  bad.sigma = 0.5;
  EXPECT_THROW(solve(model, random_state(g, 2, rng), bad, rep), ValidationError);
}

TEST(Solve, ReportsDivergence) {
  ModelSpec m;
  m.s = 1;
  m.q = {1.0};
  m.tau = {{{2}, -0.1}, {{4}, -1.0}};  // not bounded below
  auto g = make_periodic_grid({16}, {2 * M_PI});
  CmshModel model(m, g);
  State x = init_from_lattice_points(g, {{{1}}}, 0.3);
  SolverOptions o;
  o.divergence_floor = -1e3;
  RunReport rep;
  solve(model, x, o, rep);
  EXPECT_EQ(rep.termination, Termination::diverged);
}

}  // namespace
