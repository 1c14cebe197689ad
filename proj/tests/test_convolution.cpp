#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <random>

#include "ealign/convolution.hpp"

using namespace ealign;

namespace {

std::vector<double> indicator(const Grid1D& g, double a, double b) {
  std::vector<double> r(g.n_cells, 0.0);
  for (int i = 0; i < g.n_cells; ++i) {
    const double lo = std::max(a, g.face(i)), hi = std::min(b, g.face(i + 1));
    if (hi > lo) r[i] = (hi - lo) / g.dx;
  }
  return r;
}

// int over [lo, hi] of psi0(|x - y|), integrated in the distance variable so
// the singular endpoint sits at r = 0
double cell_integral(const KernelSpec& k, const Domain& d, double lo, double hi, double x) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double r) { return psi0(k, r); };
  auto in_r = [&](double r0, double r1) {
    if (r1 < r0) std::swap(r0, r1);
    if (r1 - r0 <= 0) return 0.0;
    if (r0 < 1.0 && r1 > 1.0) return ts.integrate(f, r0, 1.0, 1e-15) + ts.integrate(f, 1.0, r1, 1e-15);
    return ts.integrate(f, r0, r1, 1e-15);
  };
  std::vector<double> cuts{lo, hi};
  for (int j = -2; j <= 2; ++j) {
    const double per = d.periodic() ? d.length() : 0.0;
    for (double c : {x + j * per, x + (j + 0.5) * per}) {
      if (c > lo && c < hi) cuts.push_back(c);
    }
    if (!d.periodic()) break;
  }
  std::sort(cuts.begin(), cuts.end());
  double s = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    // distance is monotone on each piece
    s += in_r(std::abs(d.displacement(cuts[i], x)), std::abs(d.displacement(cuts[i + 1], x)));
  }
  return s;
}

std::vector<double> oracle_points(const KernelSpec& k, const Grid1D& g, const std::vector<double>& rho) {
  std::vector<double> out(g.n_cells, 0.0);
  for (int i = 0; i < g.n_cells; ++i) {
    for (int j = 0; j < g.n_cells; ++j) {
      if (rho[j] != 0) out[i] += rho[j] * cell_integral(k, g.domain, g.face(j), g.face(j + 1), g.center(i));
    }
  }
  return out;
}

std::vector<double> random_density(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> r(n);
  for (double& v : r) v = u(rng) < 0.3 ? 0.0 : u(rng) * 3.0;
  return r;
}

}  // namespace

TEST(Convolution, ZeroDensityGivesZero) {
  const Grid1D g(Domain::window(0, 4), 32);
  const GridConvolver c(KernelSpec::power(0.5), g, Sampling::cell_average);
  for (double v : c.apply(std::vector<double>(32, 0.0))) EXPECT_EQ(v, 0.0);
}

TEST(Convolution, IndicatorAtMidpoint) {
  // centers at (k + 1/2)/3, so x = 0.5 is the center of cell 1
  const Grid1D g(Domain::window(0, 16.0 / 3.0), 16);
  const auto rho = indicator(g, 0.0, 1.0 + 1e-15);
  const auto k = KernelSpec::power(0.5);
  const GridConvolver c(k, g, Sampling::point);
  EXPECT_NEAR(c.apply(rho)[1], 2.0 * std::sqrt(2.0), 1e-13);
  const std::vector<double> xs{0.5, 2.0};
  const auto pts = convolve_at_points(k, g, rho, xs);
  EXPECT_NEAR(pts[0], 2.0 * std::sqrt(2.0), 1e-13);
  EXPECT_NEAR(pts[1], 2.0 * std::sqrt(2.0) - 2.0, 1e-13);
}

TEST(Convolution, MatchesQuadratureOracle) {
  std::mt19937_64 rng(7);
  for (const auto& k : {KernelSpec::power(0.5), KernelSpec::with_tail(0.25, 2.0), KernelSpec::bounded()}) {
    for (const auto& d : {Domain::window(-1.0, 2.0), Domain::torus(3.0)}) {
      const Grid1D g(d, 24);
      const auto rho = random_density(rng, 24);
      const auto ref = oracle_points(k, g, rho);
      const auto got = GridConvolver(k, g, Sampling::point).apply(rho);
      for (int i = 0; i < 24; ++i) {
        EXPECT_NEAR(got[i], ref[i], 1e-9 * std::max(1.0, ref[i])) << to_string(k.family) << " i=" << i;
      }
    }
  }
}

TEST(Convolution, TorusWrapsPeriodically) {
  const Grid1D g(Domain::torus(4.0), 32);
  const auto k = KernelSpec::power(0.5);
  std::vector<double> rho(32, 0.0), shifted(32, 0.0);
  rho[1] = 1.0;
  shifted[31] = 1.0;  // mirror image of cell 1 about the origin
  const GridConvolver c(k, g, Sampling::point);
  const auto a = c.apply(rho), b = c.apply(shifted);
  EXPECT_NEAR(a[0], b[0], 1e-14);
  EXPECT_NEAR(a[31], a[3], 1e-14);
  EXPECT_NEAR(c.weight_sum(), kernel_l1(k, g.domain), 1e-12);
}

TEST(Convolution, FftMatchesDirect) {
  std::mt19937_64 rng(11);
  for (const auto& d : {Domain::window(0, 5), Domain::torus(5)}) {
    for (auto s : {Sampling::point, Sampling::cell_average}) {
      const Grid1D g(d, 600);
      const auto k = KernelSpec::with_tail(0.5);
      const GridConvolver fft(k, g, s, {ConvolutionMethod::fft});
      ASSERT_TRUE(fft.uses_fft());
      const auto rho = random_density(rng, 600);
      const auto a = fft.apply(rho), b = fft.apply_direct(rho);
      for (int i = 0; i < 600; ++i) EXPECT_NEAR(a[i], b[i], 1e-11 * std::max(1.0, b[i]));
    }
  }
}

TEST(Convolution, NonNegativeAndBoundedByL1) {
  std::mt19937_64 rng(3);
  for (const auto& k : {KernelSpec::power(0.75), KernelSpec::with_tail(0.5), KernelSpec::bounded()}) {
    for (const auto& d : {Domain::window(0, 3), Domain::torus(3)}) {
      const Grid1D g(d, 64);
      for (int trial = 0; trial < 20; ++trial) {
        const auto rho = random_density(rng, 64);
        const double rmax = *std::max_element(rho.begin(), rho.end());
        for (auto s : {Sampling::point, Sampling::cell_average}) {
          for (double v : GridConvolver(k, g, s).apply(rho)) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, kernel_l1(k, d) * rmax * (1 + 1e-12));
          }
        }
      }
    }
  }
}

TEST(Convolution, RefinementInvariantForResolvableDensity) {
  std::mt19937_64 rng(5);
  const auto k = KernelSpec::power(0.5);
  for (const auto& d : {Domain::window(0, 3), Domain::torus(3)}) {
    const Grid1D coarse(d, 30), fine3(d, 90), fine2(d, 60);
    const auto rho = random_density(rng, 30);
    std::vector<double> r3(90), r2(60);
    for (int i = 0; i < 90; ++i) r3[i] = rho[i / 3];
    for (int i = 0; i < 60; ++i) r2[i] = rho[i / 2];
    const auto pc = GridConvolver(k, coarse, Sampling::point).apply(rho);
    const auto pf = GridConvolver(k, fine3, Sampling::point).apply(r3);
    const auto ac = GridConvolver(k, coarse, Sampling::cell_average).apply(rho);
    const auto af = GridConvolver(k, fine2, Sampling::cell_average).apply(r2);
    for (int i = 0; i < 30; ++i) {
      EXPECT_NEAR(pc[i], pf[3 * i + 1], 1e-12);
      EXPECT_NEAR(ac[i], 0.5 * (af[2 * i] + af[2 * i + 1]), 1e-12);
    }
  }
}

TEST(Convolution, RejectsNonFinite) {
  const Grid1D g(Domain::window(0, 1), 16);
  std::vector<double> rho(16, 1.0);
  rho[3] = std::nan("");
  EXPECT_THROW(GridConvolver(KernelSpec::power(0.5), g, Sampling::point).apply(rho), InputError);
}

TEST(Nmp, IndicatorPasses) {
  const Grid1D g(Domain::window(-1, 2), 48);
  const auto f = indicator(g, 0.0, 1.0);
  const auto r = nmp_bound(KernelSpec::power(0.5), g, f, 1.0);
  EXPECT_NEAR(r.constant, 3.0 * std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(r.bound, 3.0 * std::sqrt(2.0), 1e-14);
  EXPECT_EQ(r.argmax, 16);  // leftmost maximiser
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.actual, 2.0 * std::sqrt(2.0) + 1e-12);
}

TEST(Nmp, ZeroFunction) {
  const Grid1D g(Domain::window(0, 1), 16);
  const auto r = nmp_bound(KernelSpec::power(0.5), g, std::vector<double>(16, 0.0), 1.0);
  EXPECT_NEAR(r.constant, 3.0 * std::sqrt(2.0), 1e-14);
  EXPECT_EQ(r.bound, 0.0);
  EXPECT_EQ(r.actual, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Nmp, NarrowBump) {
  const Grid1D g(Domain::window(-1, 1), 400);
  std::vector<double> f(400, 0.0);
  // height 10 on a width-0.1 plateau, mass 1
  for (int i = 0; i < 400; ++i) {
    if (std::abs(g.center(i)) < 0.05) f[i] = 10.0;
  }
  const auto r = nmp_bound(KernelSpec::power(0.5), g, f, 1.0);
  EXPECT_NEAR(r.bound, 3.0 * std::sqrt(2.0) * std::sqrt(10.0), 1e-12);
  const auto ref = oracle_points(KernelSpec::power(0.5), Grid1D(Domain::window(-1, 1), 400), f);
  EXPECT_NEAR(r.actual, ref[r.argmax], 1e-8);
  EXPECT_TRUE(r.pass);
}

TEST(Nmp, SignErrorFails) {
  const Grid1D g(Domain::window(-1, 2), 48);
  const auto f = indicator(g, 0.0, 1.0);
  EXPECT_FALSE(nmp_bound(KernelSpec::power(0.5), g, f, 1.0, {ConvolutionMethod::direct, true}).pass);
}

TEST(Aggregation, LinearForConstantKernel) {
  const Grid1D g(Domain::window(-2, 2), 64);
  const auto rho = indicator(g, -0.5, 0.5);
  const auto u = aggregation_face_velocity(KernelSpec::constant(1.0), g, rho);
  for (int f = 0; f <= 64; ++f) {
    const double x = g.face(f);
    if (std::abs(x) <= 0.5) {
      EXPECT_NEAR(u[f], -x, 1e-13);
    }
  }
}

TEST(Aggregation, AntisymmetricForSymmetricDensity) {
  const Grid1D g(Domain::window(-2, 2), 80);
  std::vector<double> rho(80);
  for (int i = 0; i < 80; ++i) rho[i] = std::max(0.0, 1.0 - std::abs(g.center(i)));
  const auto u = aggregation_face_velocity(KernelSpec::power(0.5), g, rho);
  for (int f = 0; f <= 80; ++f) EXPECT_NEAR(u[f], -u[80 - f], 1e-12);
}

TEST(Aggregation, TorusOffsetRejected) {
  const Grid1D g(Domain::torus(2), 16);
  EXPECT_THROW(aggregation_face_velocity(KernelSpec::constant(1.0), g, std::vector<double>(16, 1.0)),
               CompatibilityError);
}
