#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <random>

#include "ealign/kernels.hpp"

using namespace ealign;

TEST(EvalPsi, PowerSingularValue) { EXPECT_DOUBLE_EQ(eval_psi(KernelSpec::power(0.5), 0.25), 2.0); }

TEST(EvalPsi, TailValue) { EXPECT_DOUBLE_EQ(eval_psi(KernelSpec::with_tail(0.5, 2.0), 2.0), 0.25); }

TEST(EvalPsi, ConstantKernel) {
  const auto k = KernelSpec::constant(1.0);
  for (double r : {1e-6, 0.3, 7.0, 1e4}) EXPECT_DOUBLE_EQ(eval_psi(k, r), 1.0);
}

TEST(EvalPsi, RejectsNonPositiveDistance) {
  const auto k = KernelSpec::power(0.5);
  EXPECT_THROW(eval_psi(k, 0.0), DomainError);
  EXPECT_THROW(eval_psi(k, -1.0), DomainError);
}

TEST(EvalPsi, MonotoneNonIncreasing) {
  for (const auto& k : {KernelSpec::power(0.3), KernelSpec::with_tail(0.7, 3.0), KernelSpec::bounded(),
                        KernelSpec::constant(2.0)}) {
    double prev = eval_psi(k, 1e-4);
    for (double r = 2e-4; r < 50.0; r *= 1.1) {
      const double v = eval_psi(k, r);
      EXPECT_LE(v, prev) << to_string(k.family) << " r=" << r;
      prev = v;
    }
  }
}

TEST(EvalPsi, TailIsContinuousAtOne) {
  const auto k = KernelSpec::with_tail(0.4, 2.5);
  EXPECT_NEAR(eval_psi(k, 1.0 - 1e-12), eval_psi(k, 1.0 + 1e-12), 1e-10);
  EXPECT_DOUBLE_EQ(eval_psi(k, 1.0), 1.0);
}

TEST(Moments, PowerClosedForm) {
  const auto k = KernelSpec::power(0.5);
  const auto m = kernel_moments(k, 0.25, 1.0);
  EXPECT_NEAR(m.mass, (1.0 - 0.5) / 0.5, 1e-15);
  EXPECT_NEAR(m.first, (1.0 - std::pow(0.25, 1.5)) / 1.5, 1e-15);
}

TEST(Moments, AgreeWithQuadratureAndAreAdditive) {
  boost::math::quadrature::tanh_sinh<double> ts;
  for (const auto& k : {KernelSpec::power(0.25), KernelSpec::with_tail(0.5, 2.0),
                        KernelSpec::with_tail(0.75, 3.5), KernelSpec::bounded()}) {
    for (auto [a, b] : {std::pair{0.0, 0.5}, {0.3, 1.7}, {1.2, 9.0}, {0.0, 4.0}}) {
      const auto m = kernel_moments(k, a, b);
      auto quad = [&](auto f) {
        if (a < 1.0 && b > 1.0) return ts.integrate(f, a, 1.0, 1e-14) + ts.integrate(f, 1.0, b, 1e-14);
        return ts.integrate(f, a, b, 1e-14);
      };
      const double q0 = quad([&](double r) { return psi0(k, r); });
      const double q1 = quad([&](double r) { return r * psi0(k, r); });
      EXPECT_NEAR(m.mass, q0, 1e-9 * std::max(1.0, q0)) << to_string(k.family);
      EXPECT_NEAR(m.first, q1, 1e-9 * std::max(1.0, q1)) << to_string(k.family);
      EXPECT_GE(m.mass, 0.0);
      EXPECT_GE(m.first, 0.0);
      const double c = 0.5 * (a + b);
      const auto l = kernel_moments(k, a, c), r = kernel_moments(k, c, b);
      EXPECT_NEAR(l.mass + r.mass, m.mass, 1e-13 * std::max(1.0, m.mass));
      EXPECT_NEAR(l.first + r.first, m.first, 1e-13 * std::max(1.0, m.first));
    }
  }
}

TEST(Potential, SecondPrimitiveIntegratesPrimitive) {
  boost::math::quadrature::tanh_sinh<double> ts;
  for (const auto& k : {KernelSpec::power(0.5), KernelSpec::with_tail(0.3, 2.0), KernelSpec::bounded()}) {
    for (double r : {0.2, 1.0, 2.5, 8.0}) {
      const double q = ts.integrate([&](double y) { return psi_primitive(k, y); }, 0.0, r, 1e-14);
      EXPECT_NEAR(potential0(k, r), q, 1e-10 * std::max(1.0, q));
    }
  }
}

TEST(Potential, DerivativeIsOddAndLinearForConstant) {
  const auto k = KernelSpec::constant(1.0);
  EXPECT_DOUBLE_EQ(potential_derivative(k, 0.7), 0.7);
  EXPECT_DOUBLE_EQ(potential_derivative(k, -0.7), -0.7);
  const auto p = KernelSpec::power(0.5);
  EXPECT_DOUBLE_EQ(potential_derivative(p, -0.25), -potential_derivative(p, 0.25));
}

TEST(Osgood, Classification) {
  EXPECT_EQ(osgood_check(KernelSpec::constant(1.0)), OsgoodStatus::holds);
  EXPECT_EQ(osgood_check(KernelSpec::bounded()), OsgoodStatus::holds);
  EXPECT_EQ(osgood_check(KernelSpec::power(0.5)), OsgoodStatus::violated);
  for (double p : {1.5, 2.0, 4.0}) {
    EXPECT_EQ(osgood_check(KernelSpec::with_tail(0.5, p)), OsgoodStatus::violated);
  }
}

TEST(Osgood, AgreesWithNumericalIntegral) {
  // int_delta^1 dr / K'(r): bounded growth <=> Osgood violated
  auto integral = [](const KernelSpec& k, double delta) {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate([&](double r) { return 1.0 / potential_derivative(k, r); }, delta, 1.0, 1e-12);
  };
  const auto sing = KernelSpec::power(0.5);
  EXPECT_NEAR(integral(sing, 1e-10), 1.0, 1e-4);  // 0.5 int r^-1/2 = 1
  const auto bnd = KernelSpec::bounded();
  EXPECT_GT(integral(bnd, 1e-10) - integral(bnd, 1e-5), 10.0);
}

TEST(NmpConstant, MatchesClosedForm) {
  EXPECT_NEAR(nmp_constant(KernelSpec::power(0.5), 1.0), 3.0 * std::sqrt(2.0), 1e-14);
}

TEST(KernelL1, TorusAndWindow) {
  const auto k = KernelSpec::power(0.5);
  EXPECT_NEAR(kernel_l1(k, Domain::torus(2.0)), 4.0, 1e-14);
  EXPECT_NEAR(kernel_l1(k, Domain::window(0.0, 4.0)), 8.0, 1e-14);
  EXPECT_NEAR(kernel_l1_line(KernelSpec::with_tail(0.5, 2.0)), 6.0, 1e-14);
}

TEST(Validate, RejectsOutOfRangeExponent) {
  auto k = KernelSpec::power(1.5);
  try {
    validate(k);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("s in (0,1)"), std::string::npos);
  }
  EXPECT_THROW(validate(KernelSpec::power(0.0)), InputError);
  EXPECT_THROW(validate(KernelSpec::with_tail(0.5, 1.0)), InputError);
  EXPECT_THROW(validate(KernelSpec::constant(0.0)), InputError);
}

TEST(Validate, RejectsWrongDeclaredBounds) {
  auto k = KernelSpec::power(0.5);
  k.lower_bound = 1.5;
  k.upper_bound = 2.0;
  EXPECT_THROW(validate(k), InputError);
  k.lower_bound = 0.5;
  EXPECT_NO_THROW(validate(k));
}

TEST(Validate, AcceptsDefaults) {
  for (const auto& k : {KernelSpec::power(0.25), KernelSpec::with_tail(0.5), KernelSpec::bounded(),
                        KernelSpec::constant(1.0)}) {
    EXPECT_NO_THROW(validate(k));
  }
}

TEST(Families, ParseRoundTrip) {
  for (auto f : {KernelFamily::power_singular, KernelFamily::power_with_tail,
                 KernelFamily::bounded_lipschitz, KernelFamily::constant}) {
    EXPECT_EQ(parse_kernel_family(to_string(f)), f);
  }
  EXPECT_THROW(parse_kernel_family("gaussian"), InputError);
}
