#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ealign/error.hpp"
#include "ealign/kernels.hpp"
#include "ealign/scenarios.hpp"
#include "ealign/trajectory.hpp"

namespace ealign {

/// Constants computed from initial data.  Optional fields are absent when
/// the hypothesis they need does not hold.
struct TheoremBounds {
  double mass = 0.0;
  double rho0_max = 0.0;
  double g0_min = 0.0;
  double g0_max_abs = 0.0;
  double u0_norm = 0.0;
  double kernel_l1 = 0.0;
  double dx = 0.0;
  std::optional<double> c1;
  double c2 = 0.0;
  std::optional<double> c_rho;
  std::optional<double> g_sup;
  std::optional<double> t_super;
  std::optional<double> t_star;
  std::optional<double> a, b, c;
  std::optional<CounterexampleParams> counterexample;
  std::vector<std::string> notes;
};

/// Cells with rho below this fraction of max rho0 are treated as vacuum.
inline constexpr double vacuum_fraction = 1e-14;

inline TheoremBounds theorem_bounds(const KernelSpec& k, const FieldState& s, double u0_norm = 0.0) {
  TheoremBounds tb;
  const int n = s.size();
  tb.mass = s.mass();
  tb.dx = s.grid.dx;
  tb.u0_norm = u0_norm;
  tb.g0_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    tb.rho0_max = std::max(tb.rho0_max, s.rho[i]);
    tb.g0_min = std::min(tb.g0_min, s.g[i]);
    tb.g0_max_abs = std::max(tb.g0_max_abs, std::abs(s.g[i]));
  }
  tb.kernel_l1 = kernel_l1(k, s.grid.domain) + k.offset * s.grid.domain.length();
  tb.c2 = nmp_constant(k, tb.mass);
  double q_max = 0.0;
  bool q_defined = true;
  for (int i = 0; i < n; ++i) {
    if (s.rho[i] < vacuum_fraction * tb.rho0_max) continue;
    if (!(s.g[i] > 0.0)) {
      q_defined = false;
      break;
    }
    q_max = std::max(q_max, s.rho[i] / s.g[i]);
  }
  if (q_defined && q_max > 0.0) {
    tb.c1 = 1.0 / q_max;
    if (k.singular()) {
      tb.c_rho = std::max(tb.rho0_max, std::pow(tb.c2 / *tb.c1, 1.0 / (1.0 - k.s)));
      tb.g_sup = std::max(tb.g0_max_abs, tb.kernel_l1 * *tb.c_rho);
    } else {
      tb.notes.push_back("density bound c_rho needs a weakly singular kernel");
    }
  } else {
    tb.notes.push_back("c1 undefined: G0 <= 0 where rho0 > 0; c_rho not applicable");
  }
  if (tb.g0_min < 0.0) tb.t_super = -1.0 / tb.g0_min;
  return tb;
}

inline TheoremBounds theorem_bounds(const Scenario& sc) {
  auto tb = theorem_bounds(sc.kernel, sc.initial, sc.u0_norm);
  if (sc.a && sc.b && sc.c) {
    tb.a = sc.a;
    tb.b = sc.b;
    tb.c = sc.c;
    if (sc.kernel.singular()) tb.t_star = aggregation_time_bound(sc.kernel, *sc.a, *sc.b, *sc.c);
  }
  if (sc.counterexample) {
    tb.counterexample = sc.counterexample;
    tb.t_star = sc.counterexample->t_star;
  }
  return tb;
}

/// Solution of g' = -g^2 + kappa g, g(0) = g0.
inline double logistic_bound(double g0, double kappa, double t) {
  double pole = std::numeric_limits<double>::infinity();
  if (g0 < 0.0) {
    if (kappa == 0.0) {
      pole = -1.0 / g0;
    } else {
      const double ratio = (kappa - g0) / (-g0);
      if (ratio > 0.0) {
        const double tp = std::log(ratio) / kappa;
        if (tp > 0.0) pole = tp;
      }
    }
  }
  if (t >= pole) throw PoleError("logistic_bound: t = " + std::to_string(t) + " at or past the pole", pole);
  if (kappa == 0.0) return g0 / (1.0 + g0 * t);
  return kappa * g0 / (g0 + (kappa - g0) * std::exp(-kappa * t));
}

/// [(b-a)^s - 2^{-s} c (b-a) lambda s t]^{1/s}, zero from T* on.
inline double pair_distance_formula(const KernelSpec& k, double width, double c, double t) {
  const double s = k.s;
  const double base = std::pow(width, s) - std::pow(2.0, -s) * c * width * k.lower_bound * s * t;
  return base > 0.0 ? std::pow(base, 1.0 / s) : 0.0;
}

struct PairDistanceReport {
  std::vector<double> t;
  std::vector<double> r;
  std::vector<double> bound;
  double t_star = 0.0;
  double max_excess = -std::numeric_limits<double>::infinity();  ///< max r - bound
  std::string source;  ///< "grid markers" or "particles"
};

namespace detail {

inline int marker_index(const Trajectory& traj, double x) {
  for (std::size_t i = 0; i < traj.marker_x0.size(); ++i) {
    if (std::abs(traj.marker_x0[i] - x) <= 1e-12 * std::max(1.0, std::abs(x))) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace detail

/// r(t) = X(t;b) - X(t;a) against the comparison bound.  Grid markers are
/// used when present, else the particles nearest a and b.
inline PairDistanceReport pair_distance_bound(const Trajectory& traj, double a, double b, const KernelSpec& k,
                                              double c) {
  if (!(b > a) || !(c > 0.0)) throw PreconditionError("pair_distance_bound needs b > a and c > 0");
  const auto& s0 = traj.initial;
  if (s0.size() == 0) throw PreconditionError("trajectory has no initial state");
  double gmax = 0.0, gin = 0.0;
  for (int i = 0; i < s0.size(); ++i) {
    gmax = std::max(gmax, std::abs(s0.g[i]));
    const double x = s0.grid.center(i);
    if (x >= a && x <= b) {
      gin = std::max(gin, std::abs(s0.g[i]));
      if (s0.rho[i] < c * (1.0 - 1e-12)) {
        throw PreconditionError("pair_distance_bound: rho0 < c at x = " + std::to_string(x));
      }
    }
  }
  if (gin > 1e-12 * std::max(gmax, 1e-300)) {
    throw PreconditionError("pair_distance_bound: G0 is not zero on [a,b] (max |G0| = " + std::to_string(gin) + ")");
  }
  PairDistanceReport rep;
  rep.t_star = aggregation_time_bound(k, a, b, c);
  const int ia = detail::marker_index(traj, a), ib = detail::marker_index(traj, b);
  auto push = [&](double t, double r) {
    rep.t.push_back(t);
    rep.r.push_back(r);
    rep.bound.push_back(pair_distance_formula(k, b - a, c, t));
    rep.max_excess = std::max(rep.max_excess, r - rep.bound.back());
  };
  if (ia >= 0 && ib >= 0 && traj.has_fields()) {
    rep.source = "grid markers";
    for (const auto& f : traj.field_series) push(f.t, f.marker_x[ib] - f.marker_x[ia]);
  } else if (ia >= 0 && ib >= 0 && traj.has_particles()) {
    rep.source = "particles";
    for (const auto& p : traj.particle_series) push(p.t, p.tracked_x[ib] - p.tracked_x[ia]);
  } else {
    throw PreconditionError("pair_distance_bound: a and b are not tracked characteristics of this run");
  }
  return rep;
}

struct Drift {
  double initial = 0.0;
  double max_abs = 0.0;
  double relative = 0.0;
};

struct PairMass {
  int first = 0, second = 0;
  double initial = 0.0;
  double max_abs_drift = 0.0;
  double relative = 0.0;
  double particle_drift = 0.0;  ///< enclosed particle mass (constant by construction)
  std::optional<double> truncated_at;
  std::string note;
};

struct ConservationReport {
  std::optional<Drift> mass, momentum, g_total;               ///< grid
  std::optional<Drift> particle_mass, particle_momentum;      ///< particles
  double grid_steps = 0.0;
  double duration = 0.0;
  std::vector<PairMass> pairs;
};

namespace detail {

template <class Series, class F>
Drift drift_of(const Series& series, F value) {
  Drift d;
  d.initial = value(series.front());
  for (const auto& s : series) d.max_abs = std::max(d.max_abs, std::abs(value(s) - d.initial));
  d.relative = d.max_abs / std::max(std::abs(d.initial), 1e-300);
  return d;
}

}  // namespace detail

inline ConservationReport conservation_report(const Trajectory& traj,
                                              const std::vector<std::pair<int, int>>& marked_pairs) {
  const std::size_t n_snap = std::max(traj.field_snapshots.size(), traj.particle_snapshots.size());
  if (n_snap < 2) throw PreconditionError("conservation_report needs at least 2 snapshots");
  ConservationReport rep;
  rep.duration = traj.termination().t_end;
  if (traj.has_fields()) {
    const auto& fs = traj.field_series;
    rep.mass = detail::drift_of(fs, [](const FieldSample& f) { return f.mass; });
    rep.momentum = detail::drift_of(fs, [](const FieldSample& f) { return f.momentum; });
    rep.g_total = detail::drift_of(fs, [](const FieldSample& f) { return f.g_total; });
    rep.grid_steps = static_cast<double>(fs.size() - 1);
  }
  if (traj.has_particles()) {
    const auto& ps = traj.particle_series;
    rep.particle_mass = detail::drift_of(ps, [](const ParticleSample& p) { return p.mass; });
    rep.particle_momentum = detail::drift_of(ps, [](const ParticleSample& p) { return p.momentum; });
  }
  const int n_markers = static_cast<int>(traj.marker_x0.size());
  for (const auto& [i, j] : marked_pairs) {
    if (i < 0 || j < 0 || i >= n_markers || j >= n_markers || i == j) {
      throw PreconditionError("conservation_report: marker pair out of range");
    }
    PairMass pm;
    pm.first = i;
    pm.second = j;
    const int lo = traj.marker_x0[i] < traj.marker_x0[j] ? i : j;
    const int hi = lo == i ? j : i;
    if (traj.has_fields()) {
      const auto& fs = traj.field_series;
      pm.initial = fs.front().marker_cum_mass[hi] - fs.front().marker_cum_mass[lo];
      for (const auto& f : fs) {
        if (!(f.marker_x[hi] > f.marker_x[lo])) {
          pm.truncated_at = f.t;
          pm.note = "marked characteristics collided";
          break;
        }
        pm.max_abs_drift = std::max(pm.max_abs_drift,
                                    std::abs(f.marker_cum_mass[hi] - f.marker_cum_mass[lo] - pm.initial));
      }
      pm.relative = pm.max_abs_drift / std::max(pm.initial, 1e-300);
    }
    if (traj.has_particles() && !traj.particle_snapshots.empty()) {
      const int pa = traj.tracked_particles[lo], pb = traj.tracked_particles[hi];
      auto enclosed = [&](const ParticleEnsemble& e) {
        long double m = 0;
        for (int q = std::min(pa, pb); q <= std::max(pa, pb); ++q) m += e.m[q];
        return static_cast<double>(m);
      };
      const double m0 = enclosed(traj.particle_snapshots.front());
      for (const auto& e : traj.particle_snapshots) {
        pm.particle_drift = std::max(pm.particle_drift, std::abs(enclosed(e) - m0));
      }
      if (!traj.has_fields()) pm.initial = m0;
    }
    rep.pairs.push_back(pm);
  }
  return rep;
}

struct BkmReport {
  std::vector<double> t;
  std::vector<double> i_full;  ///< int (|rho| + |G|) dt
  std::vector<double> i_g;     ///< int |G| dt
  std::vector<double> i_ux;    ///< int |u_x| dt
  std::vector<double> rho_inf, g_inf, ux_inf;
  bool full_diverges = false;
  bool g_diverges = false;
  bool ux_diverges = false;
  double inequality_rhs = 0.0;  ///< int |G| + l1 int |rho| + c m t
  bool inequality_holds = true;
};

/// Running BKM integrals by the trapezoid rule on the union of the grid and
/// particle sample times; sup norms are the larger of the two solvers.
/// An integral is flagged divergent when the run ended in blowup with its
/// integrand at least `growth` times max(1, its initial value).
inline BkmReport bkm_report(const Trajectory& traj, double growth = 1e3) {
  BkmReport rep;
  std::vector<double> times;
  for (const auto& f : traj.field_series) times.push_back(f.t);
  for (const auto& p : traj.particle_series) times.push_back(p.t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.empty()) return rep;

  auto interp = [](const auto& series, double t, auto value) {
    if (series.empty()) return 0.0;
    if (t <= series.front().t) return value(series.front());
    if (t >= series.back().t) return value(series.back());
    auto it = std::lower_bound(series.begin(), series.end(), t,
                               [](const auto& s, double x) { return s.t < x; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (t - lo.t) / (hi.t - lo.t);
    return (1 - w) * value(lo) + w * value(hi);
  };
  const auto& fs = traj.field_series;
  const auto& ps = traj.particle_series;
  for (double t : times) {
    const double r = std::max(interp(fs, t, [](const FieldSample& f) { return f.max_rho; }),
                              interp(ps, t, [](const ParticleSample& p) { return p.max_rho; }));
    const double g = std::max(interp(fs, t, [](const FieldSample& f) { return f.max_abs_g; }),
                              interp(ps, t, [](const ParticleSample& p) { return p.max_abs_g; }));
    const double ux = std::max(interp(fs, t, [](const FieldSample& f) { return f.max_ux; }),
                               interp(ps, t, [](const ParticleSample& p) { return p.max_ux; }));
    rep.t.push_back(t);
    rep.rho_inf.push_back(r);
    rep.g_inf.push_back(g);
    rep.ux_inf.push_back(ux);
  }
  const double l1 = traj.initial.size() ? kernel_l1(traj.kernel, traj.initial.grid.domain) : 0.0;
  const double cm = traj.kernel.offset * traj.initial_mass;
  long double a_full = 0, a_g = 0, a_ux = 0, a_rho = 0;
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    if (i > 0) {
      const double h = 0.5 * (rep.t[i] - rep.t[i - 1]);
      a_full += h * (rep.rho_inf[i] + rep.g_inf[i] + rep.rho_inf[i - 1] + rep.g_inf[i - 1]);
      a_g += h * (rep.g_inf[i] + rep.g_inf[i - 1]);
      a_ux += h * (rep.ux_inf[i] + rep.ux_inf[i - 1]);
      a_rho += h * (rep.rho_inf[i] + rep.rho_inf[i - 1]);
    }
    rep.i_full.push_back(static_cast<double>(a_full));
    rep.i_g.push_back(static_cast<double>(a_g));
    rep.i_ux.push_back(static_cast<double>(a_ux));
  }
  const double t_end = rep.t.back() - rep.t.front();
  rep.inequality_rhs = static_cast<double>(a_g + l1 * a_rho) + cm * t_end;
  rep.inequality_holds = rep.i_ux.back() <= rep.inequality_rhs * (1.0 + 1e-2) + 1e-12;
  if (traj.termination().kind == TerminationKind::blowup) {
    auto grew = [&](const std::vector<double>& v0, const std::vector<double>& v1) {
      const double a0 = v0.front() + (v1.empty() ? 0.0 : v1.front());
      const double a1 = v0.back() + (v1.empty() ? 0.0 : v1.back());
      return a1 >= growth * std::max(1.0, a0);
    };
    rep.full_diverges = grew(rep.rho_inf, rep.g_inf);
    rep.g_diverges = grew(rep.g_inf, {});
    rep.ux_diverges = grew(rep.ux_inf, {});
  }
  return rep;
}

enum class Regime { subcritical, supercritical, critical_blowup, critical_regular, aggregation, critical_unresolved };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::supercritical: return "supercritical";
    case Regime::critical_blowup: return "critical_blowup";
    case Regime::critical_regular: return "critical_regular";
    case Regime::aggregation: return "aggregation";
    case Regime::critical_unresolved: return "critical: unresolved by paper";
  }
  return "?";
}

enum class OutcomeLabel { global, blowup };

inline std::string_view to_string(OutcomeLabel l) { return l == OutcomeLabel::global ? "global" : "blowup"; }

struct TheoremCheck {
  std::string name;
  bool pass = true;
  bool skipped = false;
  std::string detail;
};

struct Outcome {
  OutcomeLabel label = OutcomeLabel::global;
  Regime regime = Regime::subcritical;
  std::vector<TheoremCheck> consistency;

  bool consistent() const {
    return std::all_of(consistency.begin(), consistency.end(), [](const TheoremCheck& c) { return c.pass; });
  }
  std::string summary() const { return std::string(to_string(label)) + "/" + std::string(to_string(regime)); }
};

/// Regime from the initial data: sign of min G0, then the structure of the
/// zero set of G0 against the density.
inline Regime classify_regime(const FieldState& s, std::optional<double> density_floor = std::nullopt) {
  const int n = s.size();
  double gmin = std::numeric_limits<double>::infinity(), gmax = 0.0, rmax = 0.0;
  for (int i = 0; i < n; ++i) {
    gmin = std::min(gmin, s.g[i]);
    gmax = std::max(gmax, std::abs(s.g[i]));
    rmax = std::max(rmax, s.rho[i]);
  }
  if (gmax == 0.0) return Regime::aggregation;
  if (gmin < 0.0) return Regime::supercritical;
  if (gmin > 0.0) return Regime::subcritical;
  const double eta_g = 1e-12 * gmax;
  const double floor = density_floor ? *density_floor * (1.0 - 1e-12) : vacuum_fraction * rmax;
  int run = 0, best = 0;
  bool touches = false;
  for (int i = 0; i < n; ++i) {
    const bool z = s.g[i] < eta_g;
    if (z && s.rho[i] > floor) {
      ++run;
      best = std::max(best, run);
    } else {
      run = 0;
    }
    if (z && s.rho[i] > vacuum_fraction * rmax) touches = true;
  }
  if (best >= 4) return Regime::critical_blowup;
  if (!touches) return Regime::critical_regular;
  return Regime::critical_unresolved;
}

inline double blowup_tolerance(double dx, std::optional<double> width = std::nullopt) {
  return std::max(0.05, 10.0 * dx / width.value_or(1.0));
}

inline Outcome classify_outcome(const Trajectory& traj, const TheoremBounds& tb) {
  const auto& term = traj.termination();
  if (term.kind == TerminationKind::aborted) {
    throw PreconditionError("classification withheld: run aborted (" + term.reason + ")");
  }
  if (term.kind == TerminationKind::running) throw PreconditionError("classification needs a terminated run");
  Outcome out;
  out.label = term.kind == TerminationKind::blowup ? OutcomeLabel::blowup : OutcomeLabel::global;
  out.regime = classify_regime(traj.initial, tb.c);
  const bool blew = out.label == OutcomeLabel::blowup;
  const double t_end = term.t_end;
  const double t_blow = blew ? term.blowup.time_estimate : 0.0;
  auto add = [&](std::string name, bool pass, std::string detail, bool skipped = false) {
    out.consistency.push_back({std::move(name), pass, skipped, std::move(detail)});
  };
  auto expect_global = [&](const std::string& why) {
    add("global existence (" + why + ")", !blew,
        blew ? "blowup detected at t = " + std::to_string(t_blow) : "completed to t = " + std::to_string(t_end));
  };
  auto expect_blowup_by = [&](const std::string& name, double bound, double tol) {
    const double limit = bound * (1.0 + tol);
    if (blew) {
      add(name, t_blow <= limit,
          "blowup at " + std::to_string(t_blow) + " vs bound " + std::to_string(bound) + " (tol " +
              std::to_string(tol) + ")");
    } else if (t_end < limit) {
      add(name, true, "skipped: t_max " + std::to_string(t_end) + " below bound " + std::to_string(limit), true);
    } else {
      add(name, false, "no blowup by t = " + std::to_string(t_end) + " > bound " + std::to_string(limit));
    }
  };
  const bool singular = traj.kernel.singular();
  const std::optional<double> width = (tb.a && tb.b) ? std::optional<double>(*tb.b - *tb.a) : std::nullopt;

  if (tb.t_super) expect_blowup_by("blowup no later than -1/min G0", *tb.t_super, blowup_tolerance(tb.dx));
  if (!singular) {
    if (tb.g0_min >= 0.0) expect_global("bounded kernel, G0 >= 0");
    return out;
  }
  switch (out.regime) {
    case Regime::subcritical: expect_global("inf G0 > 0"); break;
    case Regime::critical_regular: expect_global("rho0 = q0 G0"); break;
    case Regime::supercritical: break;
    case Regime::critical_blowup:
    case Regime::aggregation:
      if (tb.t_star) {
        expect_blowup_by("blowup no later than T*", *tb.t_star, blowup_tolerance(tb.dx, width));
      } else {
        add("blowup expected", true, blew ? "blowup detected" : "skipped: no density floor interval", !blew);
      }
      break;
    case Regime::critical_unresolved:
      add("no theorem applies", true, "single-point critical case", true);
      break;
  }
  return out;
}

}  // namespace ealign
