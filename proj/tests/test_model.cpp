#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mcpfc/model.hpp"

namespace {

using namespace mcpfc;

GridPtr line(int n) { return make_periodic_grid({n}, {2.0 * M_PI}); }

ModelSpec single(double q, double c, std::map<std::vector<int>, double> tau) {
  ModelSpec m;
  m.s = 1;
  m.q = {q};
  m.c = c;
  m.tau = std::move(tau);
  return m;
}

// Pairwise-coupled binary model with every term type present.
ModelSpec binary() {
  ModelSpec m;
  m.s = 2;
  m.q = {1.0, 1.3};
  m.c = 2.0;
  m.tau = {{{2, 0}, -0.1}, {{0, 2}, -0.2}, {{3, 0}, -0.3}, {{1, 2}, 0.4},
           {{2, 2}, 1.0},  {{4, 0}, 1.0},  {{0, 4}, 0.5},  {{1, 1}, -0.7}};
  return m;
}

TEST(Energy, ZeroState) {
  CmshModel m(binary(), make_periodic_grid({8, 8}, {10.0, 10.0}));
  const State zero{SpectralField(m.grid_ptr()), SpectralField(m.grid_ptr())};
  const auto e = energy(m, zero);
  EXPECT_EQ(e.total, 0.0);
}

TEST(Energy, QuadraticOnlyCosine) {
  CmshModel m(single(1.0, 1.0, {}), line(16));
  State st{SpectralField(m.grid_ptr())};
  st[0].at({2}) = 0.5;
  st[0].at({-2}) = 0.5;
  // Quadrature oracle: 1/2 mean(((d2/dx2 + 1) cos 2x)^2) on a fine grid.
  double acc = 0.0;
  const int nodes = 4096;
  for (int i = 0; i < nodes; ++i) {
    const double x = 2.0 * M_PI * i / nodes;
    const double lap = -3.0 * std::cos(2.0 * x);
    acc += 0.5 * lap * lap;
  }
  const auto e = energy(m, st);
  EXPECT_NEAR(e.total, acc / nodes, 1e-12);
  EXPECT_NEAR(e.total, 2.25, 1e-12);
}

TEST(Energy, BulkPolynomialCosine) {
  CmshModel m(single(1.0, 1.0, {{{2}, -0.1}, {{4}, 1.0}}), line(16));
  State st{SpectralField(m.grid_ptr())};
  st[0].at({1}) = 0.1;
  st[0].at({-1}) = 0.1;
  double acc = 0.0;
  const int nodes = 4096;
  for (int i = 0; i < nodes; ++i) {
    const double p = 0.2 * std::cos(2.0 * M_PI * i / nodes);
    acc += -0.1 * p * p + p * p * p * p;
  }
  const auto e = energy(m, st);
  EXPECT_NEAR(e.total, acc / nodes, 1e-15);
  EXPECT_NEAR(e.total, -0.0014, 1e-15);
  EXPECT_NEAR(e.total, e.quad[0] + e.bulk, 1e-12 * (1.0 + std::abs(e.total)));
}

TEST(Energy, ComponentMismatch) {
  CmshModel m(binary(), make_periodic_grid({8, 8}, {10.0, 10.0}));
  const State one{SpectralField(m.grid_ptr())};
  EXPECT_THROW(energy(m, one), ValidationError);
  const State wrong{SpectralField(m.grid_ptr()), SpectralField(make_periodic_grid({8, 8}, {9.0, 9.0}))};
  EXPECT_THROW(energy(m, wrong), ValidationError);
}

TEST(Energy, TranslationInvariant) {
  auto g = make_periodic_grid({12, 10}, {8.0, 7.0});
  CmshModel m(binary(), g);
  std::mt19937_64 rng(4);
  const State x = random_state(g, 2, rng);
  // Shift by 3 and 2 grid nodes: c(h) -> c(h) exp(i 2 pi (3 h0 / 12 + 2 h1 / 10)).
  State y = x;
  for (auto& phi : y)
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const ModeIndex h = g->mode_index(i);
      phi[i] *= std::exp(Complex(0.0, 2.0 * M_PI * (3.0 * h[0] / 12.0 + 2.0 * h[1] / 10.0)));
    }
  EXPECT_NEAR(energy(m, x).total, energy(m, y).total, 1e-14);
}

TEST(Energy, BulkMatchesConvolutionSum) {
  // For a pure quadratic and cubic bulk the grid mean is a mode-space
  // convolution: mean(phi^2) = sum_h |c_h|^2, mean(phi^3) = sum_{a+b+c = 0 mod N} c_a c_b c_c.
  auto g = line(8);
  CmshModel m2(single(1.0, 1.0, {{{2}, 1.0}}), g);
  CmshModel m3(single(1.0, 1.0, {{{3}, 1.0}}), g);
  std::mt19937_64 rng(9);
  const State x = random_state(g, 1, rng, 1.0, 0.0);
  double sq = 0.0;
  Complex cube(0.0, 0.0);
  for (std::size_t a = 0; a < 8; ++a) {
    sq += std::norm(x[0][a]);
    for (std::size_t b = 0; b < 8; ++b) cube += x[0][a] * x[0][b] * x[0][(16 - a - b) % 8];
  }
  EXPECT_NEAR(energy(m2, x).bulk, sq, 1e-14);
  EXPECT_NEAR(energy(m3, x).bulk, cube.real(), 1e-14 * (1.0 + std::abs(cube.real())));
  EXPECT_NEAR(cube.imag(), 0.0, 1e-14);
}

TEST(BulkGradient, ZeroStateNoLinearTerm) {
  CmshModel m(binary(), make_periodic_grid({8, 8}, {10.0, 10.0}));
  const State zero{SpectralField(m.grid_ptr()), SpectralField(m.grid_ptr())};
  EXPECT_EQ(max_abs(bulk_gradient(m, zero, 0)), 0.0);
  EXPECT_THROW(bulk_gradient(m, zero, 2), ValidationError);
}

TEST(BulkGradient, BilinearCoupling) {
  ModelSpec spec;
  spec.s = 2;
  spec.q = {1.0, 1.0};
  spec.tau = {{{1, 1}, 1.0}};
  auto g = make_periodic_grid({8, 6}, {5.0, 5.0});
  CmshModel m(spec, g);
  std::mt19937_64 rng(2);
  const State x = random_state(g, 2, rng);
  const SpectralField g0 = bulk_gradient(m, x, 0);
  for (std::size_t i = 0; i < g0.size(); ++i) EXPECT_NEAR(std::abs(g0[i] - x[1][i]), 0.0, 1e-15);
}

TEST(BulkGradient, MatchesFiniteDifferences) {
  auto g = make_periodic_grid({8, 8}, {9.0, 9.0});
  CmshModel m(binary(), g);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const State x = random_state(g, 2, rng);
    const State dir = random_state(g, 2, rng, 1.0);
    const double eps = 1e-5;
    for (int j = 0; j < 2; ++j) {
      State p = x, q = x;
      for (std::size_t i = 0; i < g->size(); ++i) {
        p[j][i] += eps * dir[j][i];
        q[j][i] -= eps * dir[j][i];
      }
      const double fd = (energy(m, p).bulk - energy(m, q).bulk) / (2.0 * eps);
      const double an = inner(bulk_gradient(m, x, j), dir[j]);
      EXPECT_LT(std::abs(an - fd) / std::max(std::abs(fd), 1e-12), 1e-6);
    }
  }
}

TEST(Residual, StationaryAndProjected) {
  auto g = make_periodic_grid({8, 8}, {9.0, 9.0});
  CmshModel m(binary(), g);
  const State zero{SpectralField(g), SpectralField(g)};
  EXPECT_EQ(residual(m, zero).inf_norm, 0.0);

  std::mt19937_64 rng(6);
  const State x = random_state(g, 2, rng);
  const Residual r = residual(m, x);
  for (int j = 0; j < 2; ++j) {
    EXPECT_EQ(r.blocks[j][0], Complex(0.0, 0.0));
    // Independent assembly: D phi + grad F then zero the mean.
    SpectralField ref = bulk_gradient(m, x, j);
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += m.op(j).entries[i] * x[j][i];
    ref[0] = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
      EXPECT_NEAR(std::abs(ref[i] - r.blocks[j][i]), 0.0, 1e-14);
    EXPECT_LE(max_abs(r.blocks[j]), r.inf_norm);
  }
}

TEST(GradientCheck, PassesAndCatchesCorruption) {
  auto g = make_periodic_grid({16, 16}, {12.0, 12.0});
  CmshModel m(binary(), g);
  EXPECT_LT(gradient_check(m, 6, 1).max_rel_error, 1e-6);
  EXPECT_GT(gradient_check(m, 6, 1, 1e-5, 1.01).max_rel_error, 1e-3);
}

TEST(ModelSpec, Validation) {
  EXPECT_THROW(single(0.0, 1.0, {}).validate(), ValidationError);
  EXPECT_THROW(single(1.0, -1.0, {}).validate(), ValidationError);
  EXPECT_THROW(single(1.0, 1.0, {{{5}, 1.0}}).validate(), ValidationError);
  EXPECT_THROW(single(1.0, 1.0, {{{1, 1}, 1.0}}).validate(), ValidationError);
  EXPECT_NO_THROW(binary().validate());
}

TEST(RandomState, FeasibleAndSeeded) {
  auto g = make_periodic_grid({8, 6}, {5.0, 5.0});
  std::mt19937_64 a(42), b(42);
  const State x = random_state(g, 3, a);
  const State y = random_state(g, 3, b);
  EXPECT_TRUE(is_feasible(x));
  for (int j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < g->size(); ++i) EXPECT_EQ(x[j][i], y[j][i]);
}

}  // namespace
