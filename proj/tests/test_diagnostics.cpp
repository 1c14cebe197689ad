#include <gtest/gtest.h>

#include <cmath>

#include "ealign/diagnostics.hpp"
#include "ealign/simulation.hpp"

using namespace ealign;

namespace {

GridSpec torus(int n) {
  GridSpec g;
  g.domain = DomainKind::torus;
  g.length = 4.0;
  g.x_min = -2.0;
  g.n_cells = n;
  return g;
}

Scenario equilibrium() {
  Scenario sc;
  sc.kind = ScenarioKind::subcritical;
  sc.kernel = KernelSpec::power(0.5);
  sc.grid = Grid1D(Domain::torus(4.0), 64);
  std::vector<double> rho(64, 0.25);
  const GridConvolver conv(sc.kernel, sc.grid, Sampling::cell_average);
  sc.initial = FieldState(sc.grid, rho, full_convolution(conv, rho, 1.0));
  sc.mass = 1.0;
  sc.markers = {0.5, 1.5};
  return sc;
}

}  // namespace

TEST(LogisticBound, ClosedForms) {
  EXPECT_DOUBLE_EQ(logistic_bound(-1.0, 0.0, 0.5), -2.0);
  for (double t : {0.0, 0.3, 2.0, 10.0}) EXPECT_DOUBLE_EQ(logistic_bound(1.0, 1.0, t), 1.0);
  const double ts = 2.0 * std::sqrt(2.0);
  const double eps = 1.0 / (2.0 * std::exp(ts) - 1.0);
  EXPECT_NEAR(logistic_bound(-eps, 1.0, ts), -1.0, 1e-12);
}

TEST(LogisticBound, PoleCarriesBlowupTime) {
  try {
    logistic_bound(-1.0, 0.0, 1.0);
    FAIL();
  } catch (const PoleError& e) {
    EXPECT_DOUBLE_EQ(e.blowup_time(), 1.0);
  }
  const double g0 = -0.5, k = 2.0;
  const double tp = std::log((k - g0) / -g0) / k;
  try {
    logistic_bound(g0, k, tp + 0.1);
    FAIL();
  } catch (const PoleError& e) {
    EXPECT_NEAR(e.blowup_time(), tp, 1e-15);
  }
  EXPECT_LT(logistic_bound(g0, k, 0.99 * tp), -10.0);
}

TEST(LogisticBound, MatchesOdeIntegration) {
  // RK4 on g' = -g^2 + kappa g
  const double g0 = -0.3, k = 0.8;
  double g = g0, t = 0.0;
  const double h = 1e-4;
  auto f = [&](double y) { return -y * y + k * y; };
  while (t < 1.5 - 1e-12) {
    const double a = f(g), b = f(g + h / 2 * a), c = f(g + h / 2 * b), d = f(g + h * c);
    g += h / 6 * (a + 2 * b + 2 * c + d);
    t += h;
  }
  EXPECT_NEAR(logistic_bound(g0, k, 1.5), g, 1e-12);
}

TEST(PairDistance, Formula) {
  const auto k = KernelSpec::power(0.5);
  EXPECT_NEAR(aggregation_time_bound(k, 0.0, 1.0, 1.0), 2.0 * std::sqrt(2.0), 1e-15);
  for (double t : {0.0, 0.5, 1.0, 2.0, 2.8}) {
    const double expect = std::pow(1.0 - t / (2.0 * std::sqrt(2.0)), 2.0);
    EXPECT_NEAR(pair_distance_formula(k, 1.0, 1.0, t), expect, 1e-14);
  }
  EXPECT_EQ(pair_distance_formula(k, 1.0, 1.0, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(pair_distance_formula(k, 0.7, 2.0, 0.0), 0.7);
}

TEST(PairDistance, AggregationRunBelowBound) {
  GridSpec gs;
  gs.n_cells = 2048;
  gs.horizon = 1.0;
  const auto k = KernelSpec::power(0.5);
  const auto sc = build_scenario(ScenarioKind::pure_aggregation, k, gs, {});
  const auto tb = theorem_bounds(sc);
  SolverConfig cfg;
  cfg.t_max = std::min(*tb.t_star / 2, 0.5);
  cfg.scheme = Scheme::eulerian_fv;
  const auto traj = run_simulation(sc, cfg);
  ASSERT_NE(traj.termination().kind, TerminationKind::aborted);
  const auto rep = pair_distance_bound(traj, *sc.a, *sc.b, k, *sc.c);
  EXPECT_EQ(rep.source, "grid markers");
  EXPECT_NEAR(rep.r.front(), *sc.b - *sc.a, 1e-15);
  EXPECT_LE(rep.max_excess, 2.0 * sc.grid.dx);
}

TEST(PairDistance, RefusesNonzeroG) {
  const auto sc = build_scenario(ScenarioKind::subcritical, KernelSpec::power(0.5), torus(64), {});
  SolverConfig cfg;
  cfg.t_max = 0.1;
  const auto traj = run_simulation(sc, cfg);
  EXPECT_THROW(pair_distance_bound(traj, -0.5, 0.5, sc.kernel, 0.1), PreconditionError);
}

TEST(TheoremBounds, NmpConstants) {
  const Grid1D g(Domain::torus(4.0), 64);
  // rho = 1/4 (mass 1), G = rho / 2: |q0| = 2
  const FieldState s(g, std::vector<double>(64, 0.25), std::vector<double>(64, 0.125));
  const auto tb = theorem_bounds(KernelSpec::power(0.5), s);
  ASSERT_TRUE(tb.c1 && tb.c_rho && tb.g_sup);
  EXPECT_DOUBLE_EQ(*tb.c1, 0.5);
  EXPECT_NEAR(tb.c2, 3.0 * std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(*tb.c_rho, 72.0, 1e-12);
  EXPECT_NEAR(*tb.g_sup, kernel_l1(KernelSpec::power(0.5), g.domain) * 72.0, 1e-10);
}

TEST(TheoremBounds, SuperAndCriticalCases) {
  const Grid1D g(Domain::window(-2, 2), 64);
  std::vector<double> rho(64, 0.0), gg(64, 0.0);
  for (int i = 20; i < 44; ++i) rho[i] = 1.0;
  gg[30] = -1.0;
  const auto tb = theorem_bounds(KernelSpec::power(0.5), FieldState(g, rho, gg));
  ASSERT_TRUE(tb.t_super);
  EXPECT_DOUBLE_EQ(*tb.t_super, 1.0);
  EXPECT_FALSE(tb.c_rho);
  gg[30] = 0.0;
  const auto tc = theorem_bounds(KernelSpec::power(0.5), FieldState(g, rho, gg));
  EXPECT_FALSE(tc.c1);
  EXPECT_FALSE(tc.notes.empty());
}

TEST(ClassifyRegime, ZeroSetStructure) {
  const Grid1D g(Domain::window(-2, 2), 64);
  std::vector<double> rho(64, 0.0), gg(64, 1.0);
  for (int i = 16; i < 48; ++i) rho[i] = 1.0;
  EXPECT_EQ(classify_regime(FieldState(g, rho, gg)), Regime::subcritical);
  auto z = gg;
  for (int i = 28; i < 36; ++i) z[i] = 0.0;
  EXPECT_EQ(classify_regime(FieldState(g, rho, z)), Regime::critical_blowup);
  auto one = gg;
  one[30] = 0.0;
  EXPECT_EQ(classify_regime(FieldState(g, rho, one)), Regime::critical_unresolved);
  EXPECT_EQ(to_string(Regime::critical_unresolved), "critical: unresolved by paper");
  auto outside = gg;
  for (int i = 0; i < 8; ++i) outside[i] = 0.0;
  EXPECT_EQ(classify_regime(FieldState(g, rho, outside)), Regime::critical_regular);
  EXPECT_EQ(classify_regime(FieldState(g, rho, std::vector<double>(64, 0.0))), Regime::aggregation);
}

TEST(Conservation, EquilibriumRun) {
  const auto sc = equilibrium();
  SolverConfig cfg;
  cfg.t_max = 1.0;
  cfg.n_particles = 64;
  const auto traj = run_simulation(sc, cfg);
  ASSERT_EQ(traj.termination().kind, TerminationKind::completed);
  const auto rep = conservation_report(traj, {{0, 1}});
  EXPECT_LE(rep.mass->max_abs, 1e-12);
  EXPECT_LE(rep.momentum->max_abs, 1e-12);
  EXPECT_LE(rep.g_total->max_abs, 1e-12);
  EXPECT_LE(rep.particle_momentum->max_abs, 1e-12);
  EXPECT_LE(rep.pairs[0].max_abs_drift, 1e-12);
  EXPECT_EQ(rep.pairs[0].particle_drift, 0.0);
}

TEST(Conservation, IntervalMassConvergesFirstOrder) {
  std::vector<double> drift;
  for (int n : {256, 512}) {
    const auto sc = build_scenario(ScenarioKind::subcritical, KernelSpec::power(0.5), torus(n), {});
    SolverConfig cfg;
    cfg.t_max = 1.0;
    cfg.scheme = Scheme::eulerian_fv;
    const auto traj = run_simulation(sc, cfg);
    ASSERT_EQ(traj.termination().kind, TerminationKind::completed);
    const auto rep = conservation_report(traj, {{1, 6}});
    EXPECT_LE(rep.mass->relative, 1e-12);
    drift.push_back(rep.pairs[0].max_abs_drift);
    EXPECT_LE(drift.back(), 5.0 * sc.grid.dx);
  }
  EXPECT_GE(drift[0] / drift[1], 1.5);
}

TEST(Conservation, ParticleIntervalMassExact) {
  const auto sc = build_scenario(ScenarioKind::subcritical, KernelSpec::power(0.5), torus(128), {});
  SolverConfig cfg;
  cfg.t_max = 0.5;
  cfg.scheme = Scheme::lagrangian_cs;
  cfg.n_particles = 128;
  const auto traj = run_simulation(sc, cfg);
  const auto rep = conservation_report(traj, {{0, 7}});
  EXPECT_EQ(rep.pairs[0].particle_drift, 0.0);
  EXPECT_FALSE(rep.mass);
  EXPECT_THROW(conservation_report(traj, {{0, 99}}), PreconditionError);
}

TEST(Bkm, SubcriticalFiniteSupercriticalDiverges) {
  const auto k = KernelSpec::power(0.5);
  SolverConfig cfg;
  cfg.t_max = 1.0;
  cfg.n_particles = 128;
  {
    const auto sc = build_scenario(ScenarioKind::subcritical, k, torus(128), {});
    const auto traj = run_simulation(sc, cfg);
    const auto rep = bkm_report(traj);
    EXPECT_FALSE(rep.full_diverges || rep.g_diverges || rep.ux_diverges);
    EXPECT_TRUE(std::isfinite(rep.i_full.back()));
    EXPECT_TRUE(rep.inequality_holds) << rep.i_ux.back() << " vs " << rep.inequality_rhs;
    const auto out = classify_outcome(traj, theorem_bounds(sc));
    EXPECT_EQ(out.summary(), "global/subcritical");
    EXPECT_TRUE(out.consistent());
  }
  {
    const auto sc = build_scenario(ScenarioKind::supercritical, k, torus(128), {{"g_min", -1.0}});
    const auto traj = run_simulation(sc, cfg);
    ASSERT_EQ(traj.termination().kind, TerminationKind::blowup);
    const auto rep = bkm_report(traj);
    EXPECT_TRUE(rep.g_diverges);
    EXPECT_TRUE(rep.inequality_holds) << rep.i_ux.back() << " vs " << rep.inequality_rhs;
    const auto out = classify_outcome(traj, theorem_bounds(sc));
    EXPECT_EQ(out.summary(), "blowup/supercritical");
    EXPECT_TRUE(out.consistent());
    EXPECT_LE(traj.termination().blowup.time_estimate, 1.0 * 1.05);
  }
}

TEST(Classify, CriticalIntervalBlowsBeforeTStar) {
  GridSpec gs;
  gs.n_cells = 1024;
  gs.x_min = -3.0;
  gs.x_max = 4.0;
  const auto sc = build_scenario(ScenarioKind::critical_interval, KernelSpec::power(0.5), gs, {});
  SolverConfig cfg;
  cfg.t_max = 3.0;
  cfg.n_particles = 256;
  const auto traj = run_simulation(sc, cfg);
  const auto out = classify_outcome(traj, theorem_bounds(sc));
  EXPECT_EQ(out.summary(), "blowup/critical_blowup");
  EXPECT_TRUE(out.consistent());
}

TEST(Classify, AbortedIsWithheld) {
  const auto sc = build_scenario(ScenarioKind::subcritical, KernelSpec::power(0.5), torus(256), {});
  SolverConfig cfg;
  cfg.dt_min = cfg.dt_max;  // every cfl-limited step is below dt_min
  cfg.scheme = Scheme::eulerian_fv;
  const auto traj = run_simulation(sc, cfg);
  ASSERT_EQ(traj.termination().kind, TerminationKind::aborted);
  EXPECT_THROW(classify_outcome(traj, theorem_bounds(sc)), PreconditionError);
}
