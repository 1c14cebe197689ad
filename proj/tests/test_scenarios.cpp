#include <gtest/gtest.h>

#include <cmath>

#include "ealign/diagnostics.hpp"
#include "ealign/scenarios.hpp"
#include "ealign/simulation.hpp"

using namespace ealign;

namespace {

GridSpec torus(int n = 256) {
  GridSpec g;
  g.domain = DomainKind::torus;
  g.length = 4.0;
  g.x_min = -2.0;
  g.n_cells = n;
  return g;
}

GridSpec window(int n = 512, double horizon = 1.0) {
  GridSpec g;
  g.domain = DomainKind::window;
  g.n_cells = n;
  g.horizon = horizon;
  return g;
}

bool all_pass(const Scenario& sc) {
  for (const auto& c : check_scenario(sc)) {
    if (!c.pass) {
      ADD_FAILURE() << c.name << ": " << c.detail;
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(Bump, Profile) {
  EXPECT_DOUBLE_EQ(eta(0.5), 1.0);
  EXPECT_EQ(eta(0.0), 0.0);
  EXPECT_EQ(eta(1.0), 0.0);
  EXPECT_GE(eta(0.25), std::exp(-1.0 / 3.0) * (1 - 1e-15));
  double acc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) acc += eta((i + 0.5) / n);
  EXPECT_NEAR(acc / n, eta_integral, 1e-10);
}

TEST(BuildScenario, SupercriticalTorus) {
  const auto sc = build_scenario(ScenarioKind::supercritical, KernelSpec::power(0.5), torus(), {{"g_min", -1.0}});
  EXPECT_TRUE(all_pass(sc));
  const auto tb = theorem_bounds(sc);
  ASSERT_TRUE(tb.t_super);
  EXPECT_LE(*tb.t_super, 1.0 + 1e-3);
  EXPECT_GT(sc.u0_norm, 0.0);
}

TEST(BuildScenario, CriticalIntervalTorusIsCompatible) {
  const auto sc = build_scenario(ScenarioKind::critical_interval, KernelSpec::power(0.5), torus(), {});
  EXPECT_TRUE(all_pass(sc));
  const GridConvolver conv(sc.kernel, sc.grid, Sampling::cell_average);
  const auto res = compatibility_residual(sc.initial, full_convolution(conv, sc.initial.rho, sc.mass));
  EXPECT_LE(std::abs(res.residual), 1e-12);
}

TEST(BuildScenario, AggregationWithConstantKernel) {
  const auto k = KernelSpec::constant(1.0);
  const auto sc = build_scenario(ScenarioKind::pure_aggregation, k, window(), {});
  EXPECT_TRUE(all_pass(sc));
  EXPECT_EQ(osgood_check(k), OsgoodStatus::holds);
}

TEST(BuildScenario, EveryKindPassesIndependentCheck) {
  const auto k = KernelSpec::with_tail(0.5);
  EXPECT_TRUE(all_pass(build_scenario(ScenarioKind::subcritical, k, torus(), {})));
  EXPECT_TRUE(all_pass(build_scenario(ScenarioKind::supercritical, k, window(), {})));
  EXPECT_TRUE(all_pass(build_scenario(ScenarioKind::critical_interval, k, window(), {})));
  EXPECT_TRUE(all_pass(build_scenario(ScenarioKind::critical_regular, k, window(), {})));
  EXPECT_TRUE(all_pass(build_scenario(ScenarioKind::critical_regular, k, torus(), {})));
  EXPECT_TRUE(all_pass(build_scenario(ScenarioKind::pure_aggregation, k, window(), {})));
  EXPECT_TRUE(all_pass(build_scenario(ScenarioKind::separated_supports, k, window(1024), {})));
  EXPECT_TRUE(all_pass(build_scenario(ScenarioKind::bounded_baseline, KernelSpec::bounded(), window(), {})));
}

TEST(BuildScenario, HypothesisViolationsNamed) {
  const auto k = KernelSpec::power(0.5);
  try {
    build_scenario(ScenarioKind::supercritical, k, torus(), {{"g_min", 0.5}});
    FAIL();
  } catch (const ConstructionError& e) {
    EXPECT_NE(std::string(e.what()).find("inf G0 < 0"), std::string::npos);
  }
  try {
    build_scenario(ScenarioKind::subcritical, k, torus(), {{"g_min", -0.5}});
    FAIL();
  } catch (const ConstructionError& e) {
    EXPECT_NE(std::string(e.what()).find("inf G0 > 0"), std::string::npos);
  }
  EXPECT_THROW(build_scenario(ScenarioKind::subcritical, k, torus(), {{"bogus", 1.0}}), ConstructionError);
  EXPECT_THROW(build_scenario(ScenarioKind::pure_aggregation, k, torus(), {}), ConstructionError);
  auto off = k;
  off.offset = 0.5;
  EXPECT_THROW(build_scenario(ScenarioKind::subcritical, off, torus(), {}), ConstructionError);
  EXPECT_THROW(build_scenario(ScenarioKind::bounded_baseline, k, window(), {}), ConstructionError);
  // g_min so large that the positive part would need a negative amplitude
  EXPECT_THROW(build_scenario(ScenarioKind::subcritical, k, torus(), {{"g_min", 5.0}}), ConstructionError);
  EXPECT_THROW(build_scenario(ScenarioKind::critical_interval, k, window(), {{"c", 0.0}}), ConstructionError);
}

TEST(BuildScenario, ThresholdAliasDispatches) {
  const auto k = KernelSpec::power(0.5);
  EXPECT_EQ(build_scenario(ScenarioKind::threshold, k, torus(), {{"g_min", 0.5}}).kind, ScenarioKind::subcritical);
  EXPECT_EQ(build_scenario(ScenarioKind::threshold, k, torus(), {{"g_min", -0.5}}).kind,
            ScenarioKind::supercritical);
  EXPECT_THROW(build_scenario(ScenarioKind::threshold, k, torus(), {{"g_min", 0.0}}), ConstructionError);
}

TEST(BuildScenario, Reproducible) {
  const auto k = KernelSpec::with_tail(0.5);
  const auto a = build_scenario(ScenarioKind::separated_supports, k, window(1024), {});
  const auto b = build_scenario(ScenarioKind::separated_supports, k, window(1024), {});
  EXPECT_EQ(a.initial.rho, b.initial.rho);
  EXPECT_EQ(a.initial.g, b.initial.g);
}

TEST(BuildScenario, CriticalIntervalHasFloorAndZeroSet) {
  const auto sc = build_scenario(ScenarioKind::critical_interval, KernelSpec::power(0.5), window(), {});
  ASSERT_TRUE(sc.a && sc.b && sc.c);
  EXPECT_DOUBLE_EQ(*sc.a, 0.0);
  EXPECT_DOUBLE_EQ(*sc.b, 1.0);
  EXPECT_EQ(classify_regime(sc.initial, sc.c), Regime::critical_blowup);
  EXPECT_NEAR(theorem_bounds(sc).t_star.value(), 2.0 * std::sqrt(2.0), 1e-12);
}

TEST(Counterexample, Formulas) {
  const auto k = KernelSpec::power(0.5);
  const double ts = 2.0 * std::sqrt(2.0);
  const auto p = counterexample_params(1.0, k, 0.0, ts);
  EXPECT_DOUBLE_EQ(p.C, 1.0);
  EXPECT_NEAR(p.epsilon, 1.0 / (2.0 * std::exp(ts) - 1.0), 1e-15);
  EXPECT_NEAR(p.epsilon, 0.03044, 5e-5);
  EXPECT_DOUBLE_EQ(p.L, 2.0);
  EXPECT_NEAR(counterexample_params(1.0, k, 0.7, ts).L, 2.0 + 2.0 * ts * 0.7, 1e-14);
  const auto q = counterexample_params(2.0, k, 0.0, ts);
  EXPECT_DOUBLE_EQ(q.C, 2.0 * p.C);
  EXPECT_LT(q.epsilon, p.epsilon);
}

TEST(Counterexample, DegenerateKernel) {
  auto k = KernelSpec::constant(1.0);
  k.offset = 0.0;
  const auto p = counterexample_params(1.0, k, 0.0, 1.0);
  EXPECT_TRUE(p.degenerate);
  EXPECT_EQ(p.C, 0.0);
  EXPECT_EQ(p.epsilon, 0.0);
  EXPECT_FALSE(p.note.empty());
}

TEST(Counterexample, SupportsStaySeparated) {
  const auto k = KernelSpec::with_tail(0.5);
  auto sc = build_scenario(ScenarioKind::separated_supports, k, window(1024), {});
  const auto& ce = *sc.counterexample;
  EXPECT_NEAR(ce.C, eval_psi(k, 1.0) * sc.mass, 1e-15);
  SolverConfig cfg;
  cfg.t_max = ce.t_star;
  cfg.scheme = Scheme::eulerian_fv;
  cfg.snapshot_dt = 0.05;
  const auto traj = run_simulation(sc, cfg);
  ASSERT_NE(traj.termination().kind, TerminationKind::aborted) << traj.termination().reason;
  for (const auto& snap : traj.field_snapshots) {
    const auto& s = snap.state;
    double rmax = *std::max_element(s.rho.begin(), s.rho.end());
    double gabs = 0.0;
    for (double g : s.g) gabs = std::max(gabs, std::abs(g));
    double rho_hi = -1e300, g_lo = 1e300;
    for (int i = 0; i < s.size(); ++i) {
      if (s.rho[i] > 1e-8 * rmax) rho_hi = std::max(rho_hi, s.grid.face(i + 1));
      if (std::abs(s.g[i]) > 1e-8 * gabs) g_lo = std::min(g_lo, s.grid.face(i));
    }
    EXPECT_GE(g_lo - rho_hi, 1.0) << "t = " << s.t;
  }
}
