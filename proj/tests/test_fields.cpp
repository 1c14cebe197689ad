#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ealign/fields.hpp"

using namespace ealign;

namespace {

std::vector<double> indicator(const Grid1D& g, double a, double b, double height = 1.0) {
  std::vector<double> r(g.n_cells, 0.0);
  for (int i = 0; i < g.n_cells; ++i) {
    const double lo = std::max(a, g.face(i)), hi = std::min(b, g.face(i + 1));
    if (hi > lo) r[i] = height * (hi - lo) / g.dx;
  }
  return r;
}

std::vector<double> smooth_bump(const Grid1D& g, double c, double w) {
  std::vector<double> r(g.n_cells, 0.0);
  for (int i = 0; i < g.n_cells; ++i) {
    const double z = (g.center(i) - c) / w;
    if (std::abs(z) < 1) r[i] = std::exp(1.0 - 1.0 / (1.0 - z * z));
  }
  return r;
}

}  // namespace

TEST(RecoverVelocity, EquilibriumIsAtRest) {
  const Grid1D g(Domain::torus(4.0), 64);
  const auto k = KernelSpec::power(0.5);
  std::vector<double> rho(64, 0.25);
  const GridConvolver conv(k, g, Sampling::cell_average);
  FieldState s(g, rho, full_convolution(conv, rho, 1.0));
  const auto u = recover_velocity(s, conv, 0.0);
  for (double v : u.centers) EXPECT_NEAR(v, 0.0, 1e-14);
  for (double v : u.faces) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(RecoverVelocity, ConstantKernelGivesLinearField) {
  const Grid1D g(Domain::window(-3, 3), 96);
  FieldState s(g, indicator(g, -0.5, 0.5), std::vector<double>(96, 0.0));
  const auto u = recover_velocity(KernelSpec::constant(1.0), s, 0.0);
  for (int i = 0; i < 96; ++i) EXPECT_NEAR(u.centers[i], -g.center(i), 1e-12);
  for (int f = 0; f <= 96; ++f) EXPECT_NEAR(u.faces[f], -g.face(f), 1e-12);
}

TEST(RecoverVelocity, ShiftInGIsAnchoredPrimitive) {
  const Grid1D g(Domain::window(-3, 3), 96);
  const auto k = KernelSpec::with_tail(0.5);
  auto rho = smooth_bump(g, 0.3, 1.0);
  auto gg = smooth_bump(g, -0.2, 0.8);
  FieldState a(g, rho, gg);
  const double delta = 0.37;
  for (double& v : gg) v += delta;
  FieldState b(g, rho, gg);
  const auto ua = recover_velocity(k, a, 0.1), ub = recover_velocity(k, b, 0.1);
  long double xbar = 0, m = 0;
  for (int i = 0; i < 96; ++i) {
    xbar += rho[i] * g.center(i);
    m += rho[i];
  }
  xbar /= m;
  for (int i = 0; i < 96; ++i) {
    EXPECT_NEAR(ub.slope[i] - ua.slope[i], delta, 1e-12);
    EXPECT_NEAR(ub.centers[i] - ua.centers[i], delta * (g.center(i) - static_cast<double>(xbar)), 1e-12);
  }
  EXPECT_NEAR(momentum(b, ub), 0.1, 1e-14);
}

TEST(RecoverVelocity, TorusIncompatibilityNamesResidual) {
  const Grid1D g(Domain::torus(2.0), 32);
  FieldState s(g, std::vector<double>(32, 1.0), std::vector<double>(32, 0.0));
  try {
    recover_velocity(KernelSpec::power(0.5), s, 0.0);
    FAIL();
  } catch (const CompatibilityError& e) {
    EXPECT_NEAR(e.residual(), -2.0 * kernel_l1(KernelSpec::power(0.5), g.domain), 1e-10);
    EXPECT_NE(std::string(e.what()).find("incompatible"), std::string::npos);
  }
}

TEST(RecoverVelocity, AgreesWithAggregationVelocity) {
  for (const auto& k : {KernelSpec::power(0.5), KernelSpec::with_tail(0.25), KernelSpec::constant(1.0)}) {
    const Grid1D g(Domain::window(-4, 4), 256);
    FieldState s(g, smooth_bump(g, 0.4, 1.0), std::vector<double>(256, 0.0));
    const auto agg = aggregation_velocity(k, s);
    const auto rec = recover_velocity(k, s, momentum(s, agg));
    for (int i = 0; i < 256; ++i) EXPECT_NEAR(rec.centers[i], agg.centers[i], 1e-10) << to_string(k.family);
  }
}

TEST(RecoverVelocity, SlopeEstimate) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto k = KernelSpec::with_tail(0.5);
  const Grid1D g(Domain::window(-2, 2), 128);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> rho(128), gg(128);
    for (int i = 0; i < 128; ++i) {
      rho[i] = std::abs(u(rng));
      gg[i] = 3 * u(rng);
    }
    FieldState s(g, rho, gg);
    const auto vel = recover_velocity(k, s, 0.0);
    const double gmax = std::abs(*std::max_element(gg.begin(), gg.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    }));
    const double rmax = *std::max_element(rho.begin(), rho.end());
    EXPECT_LE(vel.max_abs_slope(), gmax + kernel_l1(k, g.domain) * rmax + 1e-12);
  }
}

TEST(Particles, UniformQuantiles) {
  const Grid1D g(Domain::window(-1, 2), 48);
  FieldState s(g, indicator(g, 0.0, 1.0), std::vector<double>(48, 0.0));
  const auto e = particles_from_fields(KernelSpec::constant(1.0), s, 4, 0.0);
  const double want[] = {0.125, 0.375, 0.625, 0.875};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(e.x[i], want[i], 1e-14);
    EXPECT_NEAR(e.m[i], 0.25, 1e-15);
  }
  EXPECT_NEAR(e.total_momentum(), 0.0, 1e-15);
}

TEST(Particles, TwoEqualBumpsSplitEvenly) {
  const Grid1D g(Domain::window(-3, 3), 120);
  auto rho = smooth_bump(g, -1.5, 0.5);
  const auto right = smooth_bump(g, 1.5, 0.5);
  for (int i = 0; i < 120; ++i) rho[i] += right[i];
  FieldState s(g, rho, std::vector<double>(120, 0.0));
  const auto e = particles_from_fields(KernelSpec::with_tail(0.5), s, 64, 0.0);
  EXPECT_EQ(std::count_if(e.x.begin(), e.x.end(), [](double x) { return x < 0; }), 32);
}

TEST(Particles, RoundTripConvergesAtFirstOrder) {
  const auto k = KernelSpec::with_tail(0.5);
  const Grid1D g(Domain::window(-2, 2), 800);
  FieldState s(g, smooth_bump(g, 0.0, 1.0), std::vector<double>(800, 0.0));
  std::vector<double> err;
  for (int n : {50, 100, 200}) {
    const auto e = particles_from_fields(k, s, n, 0.0);
    const auto back = deposit_particles(e, g);
    double l1 = 0;
    for (int i = 0; i < 800; ++i) l1 += std::abs(back[i] - s.rho[i]) * g.dx;
    err.push_back(l1);
  }
  EXPECT_GT(err[0] / err[1], 1.5);
  EXPECT_GT(err[1] / err[2], 1.5);
}

TEST(Particles, DepositConservesMassOnTorus) {
  ParticleEnsemble e;
  e.domain = Domain::torus(1.0);
  e.x = {0.05, 0.3, 0.6, 0.97};
  e.m = {0.25, 0.25, 0.25, 0.25};
  e.v = e.rho = e.g = std::vector<double>(4, 0.0);
  const Grid1D g(e.domain, 32);
  const auto r = deposit_particles(e, g);
  double m = 0;
  for (double v : r) m += v * g.dx;
  EXPECT_NEAR(m, 1.0, 1e-14);
  EXPECT_NEAR(e.gap(3), 0.08, 1e-14);
}

TEST(Particles, RejectsTooFew) {
  const Grid1D g(Domain::window(-1, 2), 48);
  FieldState s(g, indicator(g, 0.0, 1.0), std::vector<double>(48, 0.0));
  EXPECT_THROW(particles_from_fields(KernelSpec::constant(1.0), s, 1, 0.0), InputError);
}

TEST(Grid, RejectsTooFewCells) { EXPECT_THROW(Grid1D(Domain::torus(1.0), 8), InputError); }
