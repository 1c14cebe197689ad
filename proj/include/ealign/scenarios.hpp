#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ealign/convolution.hpp"
#include "ealign/error.hpp"
#include "ealign/fields.hpp"
#include "ealign/kernels.hpp"

namespace ealign {

enum class ScenarioKind {
  subcritical,
  supercritical,
  critical_interval,
  critical_regular,
  pure_aggregation,
  separated_supports,
  bounded_baseline,
  threshold,  ///< subcritical or supercritical by the sign of g_min
};

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::subcritical: return "subcritical";
    case ScenarioKind::supercritical: return "supercritical";
    case ScenarioKind::critical_interval: return "critical_interval";
    case ScenarioKind::critical_regular: return "critical_regular";
    case ScenarioKind::pure_aggregation: return "pure_aggregation";
    case ScenarioKind::separated_supports: return "separated_supports";
    case ScenarioKind::bounded_baseline: return "bounded_baseline";
    case ScenarioKind::threshold: return "threshold";
  }
  return "?";
}

inline ScenarioKind parse_scenario_kind(std::string_view s) {
  for (auto k : {ScenarioKind::subcritical, ScenarioKind::supercritical, ScenarioKind::critical_interval,
                 ScenarioKind::critical_regular, ScenarioKind::pure_aggregation,
                 ScenarioKind::separated_supports, ScenarioKind::bounded_baseline, ScenarioKind::threshold}) {
    if (to_string(k) == s) return k;
  }
  throw InputError("unknown scenario kind '" + std::string(s) + "'");
}

/// Smooth bump on (0,1) with maximum exactly 1 at y = 1/2:
/// eta(y) = exp(1 - 1/(1 - z^2)), z = 2y - 1.  eta >= e^(-1/3) on [1/4, 3/4].
inline double eta(double y) {
  if (!(y > 0.0 && y < 1.0)) return 0.0;
  const double z = 2.0 * y - 1.0;
  return std::exp(1.0 - 1.0 / (1.0 - z * z));
}

/// int_0^1 eta.
inline constexpr double eta_integral = 0.60345016121893809;

/// height * eta((x - left) / width): support (left, left + width).
struct Bump {
  double left = 0.0;
  double width = 1.0;
  double height = 1.0;

  double operator()(double x) const { return height * eta((x - left) / width); }
  double right() const { return left + width; }
  double mass() const { return height * width * eta_integral; }
  static Bump centered(double center, double width, double height) {
    return {center - 0.5 * width, width, height};
  }
};

using Params = std::map<std::string, double>;

struct GridSpec {
  DomainKind domain = DomainKind::window;
  double length = 4.0;   ///< torus
  double x_min = 0.0;    ///< torus origin or manual window
  double x_max = 0.0;    ///< manual window (x_min < x_max), else auto-sized
  int n_cells = 1024;
  double horizon = 1.0;  ///< auto window: time no characteristic may exit before

  bool auto_window() const { return domain == DomainKind::window && !(x_max > x_min); }
};

struct CounterexampleParams {
  double C = 0.0;
  double t_star = 0.0;
  double L = 0.0;
  double epsilon = 0.0;
  bool degenerate = false;
  std::string note;
};

/// psi(1) m, T*, L = 2 + 2 T* |u0|, eps = C / (2 e^(C T*) - 1).
inline CounterexampleParams counterexample_params(double mass, const KernelSpec& k, double u0_norm,
                                                  double t_star) {
  if (!(mass > 0.0)) throw ConstructionError("counterexample needs positive mass");
  if (!(t_star > 0.0)) throw ConstructionError("counterexample needs T* > 0");
  CounterexampleParams p;
  p.C = eval_psi(k, 1.0) * mass;
  p.t_star = t_star;
  p.L = 2.0 + 2.0 * t_star * u0_norm;
  if (p.C == 0.0) {
    p.degenerate = true;
    p.note = "psi(1) = 0: psi * rho vanishes on supp G, so G follows the pure Riccati law";
    return p;
  }
  p.epsilon = p.C / (2.0 * std::exp(p.C * t_star) - 1.0);
  return p;
}

/// T* = 2^s / (c (b-a)^(1-s) lambda s).
inline double aggregation_time_bound(const KernelSpec& k, double a, double b, double c) {
  return std::pow(2.0, k.s) / (c * std::pow(b - a, 1.0 - k.s) * k.lower_bound * k.s);
}

struct Scenario {
  ScenarioKind kind = ScenarioKind::subcritical;  ///< resolved kind (never threshold)
  KernelSpec kernel;
  Grid1D grid;
  FieldState initial;
  double momentum = 0.0;
  Params params;
  std::vector<double> markers;  ///< characteristic start points to track
  double mass = 0.0;
  double u0_norm = 0.0;
  /// density floor interval for T*, when the kind defines one
  std::optional<double> a, b, c;
  std::optional<CounterexampleParams> counterexample;
};

namespace detail {

inline const std::map<ScenarioKind, std::map<std::string, double>>& scenario_defaults() {
  static const std::map<ScenarioKind, std::map<std::string, double>> d{
      {ScenarioKind::subcritical,
       {{"g_min", 0.5}, {"rho_base", 0.25}, {"rho_height", 0.5}, {"rho_width", 2.0}, {"g_width", 2.0},
        {"center", 0.0}, {"momentum", 0.0}, {"n_markers", 8}}},
      {ScenarioKind::supercritical,
       {{"g_min", -1.0}, {"rho_base", 0.25}, {"rho_height", 0.5}, {"rho_width", 2.0}, {"g_width", 1.0},
        {"center", 0.0}, {"momentum", 0.0}, {"n_markers", 8}}},
      {ScenarioKind::critical_interval,
       {{"a", 0.0}, {"b", 1.0}, {"c", 1.0}, {"shoulder", 1.0}, {"momentum", 0.0}}},
      {ScenarioKind::bounded_baseline,
       {{"a", 0.0}, {"b", 1.0}, {"c", 1.0}, {"shoulder", 1.0}, {"momentum", 0.0}}},
      {ScenarioKind::critical_regular,
       {{"q0", 0.5}, {"g_height", 1.0}, {"g_width", 2.0}, {"center", 0.0}, {"momentum", 0.0}}},
      {ScenarioKind::pure_aggregation,
       {{"rho_height", 1.0}, {"rho_width", 1.0}, {"mass", 0.0}, {"center", 0.0}, {"momentum", 0.0}}},
      {ScenarioKind::separated_supports, {{"c", 1.0}, {"t_star", 0.0}, {"momentum", 0.0}}},
  };
  return d;
}

inline Params merged_params(ScenarioKind kind, const Params& given) {
  const auto& defaults = scenario_defaults().at(kind);
  Params p = defaults;
  for (const auto& [key, v] : given) {
    if (!defaults.count(key)) {
      std::string allowed;
      for (const auto& [k2, v2] : defaults) allowed += (allowed.empty() ? "" : ", ") + k2;
      throw ConstructionError("scenario " + std::string(to_string(kind)) + ": unknown parameter '" + key +
                              "' (allowed: " + allowed + ")");
    }
    if (!std::isfinite(v)) throw ConstructionError("scenario parameter '" + key + "' must be finite");
    p[key] = v;
  }
  return p;
}

struct Profiles {
  std::vector<Bump> rho;
  std::vector<Bump> g;
  double rho_base = 0.0;
  double g_base = 0.0;
  std::vector<Bump> g_compat;  ///< positive part rescaled for torus compatibility
  double support_lo = 0.0, support_hi = 0.0;
};

inline std::vector<double> sample(const Grid1D& grid, const std::vector<Bump>& bumps, double base) {
  std::vector<double> v(grid.n_cells, base);
  for (int i = 0; i < grid.n_cells; ++i) {
    const double x = grid.center(i);
    for (const auto& b : bumps) {
      if (grid.periodic()) {
        // bumps placed in the fundamental cell; evaluate at the nearest image
        const double d = grid.domain.displacement(b.left + 0.5 * b.width, x);
        v[i] += b(b.left + 0.5 * b.width + d);
      } else {
        v[i] += b(x);
      }
    }
  }
  return v;
}

}  // namespace detail

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Builds and validates the initial data of a scenario.  Torus scenarios
/// rescale the positive part of G0 so that int G0 = int psi * rho0.
inline Scenario build_scenario(ScenarioKind requested, const KernelSpec& kernel, const GridSpec& gs,
                               const Params& given) {
  validate(kernel);
  ScenarioKind kind = requested;
  if (kind == ScenarioKind::threshold) {
    Params probe = given;
    const double gmin = probe.count("g_min") ? probe.at("g_min") : 0.0;
    if (gmin > 0.0) {
      kind = ScenarioKind::subcritical;
    } else if (gmin < 0.0) {
      kind = ScenarioKind::supercritical;
    } else {
      throw ConstructionError("threshold scenario needs a non-zero g_min");
    }
  }
  const Params p = detail::merged_params(kind, given);
  const bool torus = gs.domain == DomainKind::torus;
  if (torus && kernel.offset != 0.0) {
    throw ConstructionError("a constant kernel offset has no periodic velocity: use a window domain");
  }
  if (gs.n_cells < Grid1D::min_cells) {
    throw ConstructionError("grid needs at least " + std::to_string(Grid1D::min_cells) + " cells");
  }
  const bool bounded = !kernel.singular();
  if (kind == ScenarioKind::bounded_baseline && !bounded) {
    throw ConstructionError("bounded_baseline needs a bounded kernel (bounded_lipschitz or constant)");
  }
  if ((kind == ScenarioKind::pure_aggregation) && torus) {
    throw ConstructionError("pure_aggregation (G0 = 0) admits no periodic velocity: use a window domain");
  }

  Scenario sc;
  sc.kind = kind;
  sc.kernel = kernel;
  sc.params = p;
  sc.momentum = p.at("momentum");

  detail::Profiles prof;
  const double center = p.count("center") ? p.at("center") : 0.0;
  switch (kind) {
    case ScenarioKind::subcritical:
    case ScenarioKind::supercritical: {
      const double gmin = p.at("g_min");
      if (kind == ScenarioKind::subcritical && !(gmin > 0.0)) {
        throw ConstructionError("subcritical hypothesis inf G0 > 0 violated: g_min = " + std::to_string(gmin));
      }
      if (kind == ScenarioKind::supercritical && !(gmin < 0.0)) {
        throw ConstructionError("supercritical hypothesis inf G0 < 0 violated: g_min = " + std::to_string(gmin));
      }
      const double rw = p.at("rho_width"), gw = p.at("g_width");
      if (!(rw > 0.0 && gw > 0.0)) throw ConstructionError("bump widths must be positive");
      if (p.at("rho_base") < 0.0 || p.at("rho_height") < 0.0) {
        throw ConstructionError("density parameters must be non-negative");
      }
      if ((!torus || p.at("rho_base") == 0.0) && p.at("rho_height") == 0.0) throw ConstructionError("density must have positive mass");
      if (!torus && given.count("rho_base") && given.at("rho_base") != 0.0) {
        throw ConstructionError("rho_base must be 0 on a window (mass must stay compactly inside)");
      }
      prof.rho_base = torus ? p.at("rho_base") : 0.0;
      if (p.at("rho_height") > 0.0) prof.rho.push_back(Bump::centered(center, rw, p.at("rho_height")));
      if (kind == ScenarioKind::subcritical) {
        if (!torus) throw ConstructionError("subcritical data need inf G0 > 0 on the whole domain: use a torus");
        prof.g_base = gmin;
        prof.g_compat.push_back(Bump::centered(center, gw, 1.0));
      } else {
        prof.g.push_back(Bump::centered(center, gw, gmin));
        if (torus) {
          const double len = gs.length;
          if (gw >= 0.5 * len) throw ConstructionError("g_width must be below half the torus length");
          prof.g_compat.push_back(Bump::centered(center + 0.5 * len, gw, 1.0));
        }
      }
      prof.support_lo = center - 0.5 * std::max(rw, gw);
      prof.support_hi = center + 0.5 * std::max(rw, gw);
      const int nm = static_cast<int>(p.at("n_markers"));
      for (int k = 0; k < nm; ++k) {
        sc.markers.push_back(center - 0.5 * rw + rw * (k + 0.5) / nm);
      }
      if (kind == ScenarioKind::supercritical) sc.markers.insert(sc.markers.begin(), center);
      break;
    }
    case ScenarioKind::critical_interval:
    case ScenarioKind::bounded_baseline: {
      const double a = p.at("a"), b = p.at("b"), c = p.at("c");
      if (!(b > a)) throw ConstructionError("critical interval needs b > a");
      if (!(c > 0.0)) throw ConstructionError("critical hypothesis rho0 >= c > 0 on [a,b] needs c > 0");
      const double w = b - a;
      // rho0 >= c on the middle half of its support
      prof.rho.push_back({a - 0.5 * w, 2.0 * w, c * std::exp(1.0 / 3.0)});
      const double sh = p.at("shoulder");
      if (sh < 0.0) throw ConstructionError("critical data need G0 >= 0: shoulder must be non-negative");
      const double hw = 0.5 * w;
      if (torus) {
        prof.g_compat.push_back({a - hw, hw, 1.0});
        prof.g_compat.push_back({b, hw, 1.0});
      } else if (sh > 0.0) {
        prof.g.push_back({a - hw, hw, sh});
        prof.g.push_back({b, hw, sh});
      }
      sc.a = a;
      sc.b = b;
      sc.c = c;
      sc.markers = {a, b};
      prof.support_lo = a - hw;
      prof.support_hi = b + hw;
      break;
    }
    case ScenarioKind::critical_regular: {
      const double q0 = p.at("q0"), gh = p.at("g_height"), gw = p.at("g_width");
      if (!(q0 > 0.0 && gh > 0.0 && gw > 0.0)) throw ConstructionError("critical_regular needs q0, g_height, g_width > 0");
      prof.g.push_back(Bump::centered(center, gw, gh));
      prof.support_lo = center - 0.5 * gw;
      prof.support_hi = center + 0.5 * gw;
      sc.markers = {center - 0.25 * gw, center + 0.25 * gw};
      break;
    }
    case ScenarioKind::pure_aggregation: {
      const double rw = p.at("rho_width");
      if (!(rw > 0.0)) throw ConstructionError("rho_width must be positive");
      double h = p.at("rho_height");
      if (p.at("mass") > 0.0) h = p.at("mass") / (rw * eta_integral);
      if (!(h > 0.0)) throw ConstructionError("pure_aggregation needs positive mass");
      prof.rho.push_back(Bump::centered(center, rw, h));
      sc.a = center - 0.25 * rw;
      sc.b = center + 0.25 * rw;
      sc.c = h * std::exp(-1.0 / 3.0);
      sc.markers = {*sc.a, *sc.b};
      prof.support_lo = center - 0.5 * rw;
      prof.support_hi = center + 0.5 * rw;
      break;
    }
    case ScenarioKind::separated_supports: {
      if (torus) throw ConstructionError("separated_supports lives on the line: use a window domain");
      if (!kernel.singular()) throw ConstructionError("separated_supports needs a weakly singular kernel");
      const double c = p.at("c");
      if (!(c > 0.0)) throw ConstructionError("density floor c must be positive");
      prof.rho.push_back({0.0, 1.0, c * std::exp(1.0 / 3.0)});
      sc.a = 0.25;
      sc.b = 0.75;
      sc.c = c;
      sc.markers = {0.25, 0.75};
      prof.support_lo = 0.0;
      prof.support_hi = 1.0;
      break;
    }
    case ScenarioKind::threshold: break;
  }

  // bump on G at distance L from the density, sized from |u0| by fixed point
  double sep_L = 0.0, sep_eps = 0.0;
  auto place_counterexample = [&](double u0) {
    const double m = 0.0 + prof.rho[0].mass();
    double ts = p.at("t_star");
    if (!(ts > 0.0)) ts = aggregation_time_bound(kernel, *sc.a, *sc.b, *sc.c);
    sc.counterexample = counterexample_params(m, kernel, u0, ts);
    sep_L = sc.counterexample->L;
    sep_eps = sc.counterexample->epsilon;
    prof.g = {{sep_L, 1.0, -sep_eps}};
    prof.support_hi = sep_L + 1.0;
  };

  auto make_grid = [&](double lo, double hi, double u0) {
    if (torus) return Grid1D(Domain::torus(gs.length, gs.x_min), gs.n_cells);
    if (!gs.auto_window()) return Grid1D(Domain::window(gs.x_min, gs.x_max), gs.n_cells);
    const double margin = 2.0 * tail_length(kernel) + gs.horizon * u0;
    return Grid1D(Domain::window(lo - margin, hi + margin), gs.n_cells);
  };

  auto assemble = [&](const Grid1D& grid) {
    auto rho = detail::sample(grid, prof.rho, prof.rho_base);
    auto g = detail::sample(grid, prof.g, prof.g_base);
    if (!prof.g_compat.empty()) {
      const GridConvolver conv(kernel, grid, Sampling::cell_average);
      long double mass = 0;
      for (double r : rho) mass += r;
      mass *= grid.dx;
      const auto cv = full_convolution(conv, rho, static_cast<double>(mass));
      long double need = 0, have = 0;
      for (int i = 0; i < grid.n_cells; ++i) {
        need += cv[i] - g[i];
      }
      const auto pos = detail::sample(grid, prof.g_compat, 0.0);
      for (double v : pos) have += v;
      if (!(have > 0)) throw ConstructionError("compatibility bump does not fit on the grid");
      const double scale = static_cast<double>(need / have);
      if (scale < 0.0) {
        throw ConstructionError("torus compatibility int G0 = int psi*rho0 needs a negative positive-part "
                                "amplitude (" + std::to_string(scale) + "): lower g_min or raise the mass");
      }
      for (int i = 0; i < grid.n_cells; ++i) g[i] += scale * pos[i];
    }
    return FieldState(grid, std::move(rho), std::move(g));
  };

  auto u0_of = [&](const FieldState& s) {
    const auto u = recover_velocity(kernel, s, sc.momentum);
    // sup over material and over the support of G0
    double m = 0.0;
    const double rmax = max_abs(s.rho), gmax = max_abs(s.g);
    for (int i = 0; i < s.size(); ++i) {
      if (s.rho[i] > 1e-12 * rmax || std::abs(s.g[i]) > 1e-12 * gmax) m = std::max(m, std::abs(u.centers[i]));
    }
    return m;
  };

  if (kind == ScenarioKind::critical_regular) {
    // rho0 = q0 G0; on a torus q0 is fixed by compatibility
    const Grid1D grid = make_grid(prof.support_lo, prof.support_hi, 0.0);
    auto g = detail::sample(grid, prof.g, 0.0);
    double q0 = p.at("q0");
    if (torus) {
      const GridConvolver conv(kernel, grid, Sampling::cell_average);
      q0 = 1.0 / kernel_l1(kernel, grid.domain);
      sc.params["q0"] = q0;
    }
    std::vector<double> rho(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) rho[i] = q0 * g[i];
    FieldState s(grid, rho, g);
    if (!torus && gs.auto_window()) {
      const double u0 = u0_of(s);
      const Grid1D g2 = make_grid(prof.support_lo, prof.support_hi, u0);
      auto gg = detail::sample(g2, prof.g, 0.0);
      std::vector<double> rr(gg.size());
      for (std::size_t i = 0; i < gg.size(); ++i) rr[i] = q0 * gg[i];
      s = FieldState(g2, rr, gg);
    }
    sc.initial = s;
  } else if (kind == ScenarioKind::separated_supports) {
    // |u0| depends on L through the G bump; iterate to a fixed point
    double u0 = 0.0;
    place_counterexample(u0);
    for (int it = 0; it < 20; ++it) {
      const Grid1D grid = make_grid(prof.support_lo, prof.support_hi, u0);
      const auto s = assemble(grid);
      const double next = u0_of(s);
      const bool done = std::abs(next - u0) <= 1e-9 * std::max(1.0, next);
      u0 = next;
      place_counterexample(u0);
      if (done) break;
    }
    sc.initial = assemble(make_grid(prof.support_lo, prof.support_hi, u0));
  } else {
    auto s = assemble(make_grid(prof.support_lo, prof.support_hi, 0.0));
    if (!torus && gs.auto_window()) s = assemble(make_grid(prof.support_lo, prof.support_hi, u0_of(s)));
    sc.initial = s;
  }
  (void)sep_eps;
  sc.grid = sc.initial.grid;
  sc.initial.validate();
  sc.mass = sc.initial.mass();
  sc.u0_norm = u0_of(sc.initial);
  if (sc.counterexample) {
    // final constants from the data actually placed on the grid
    sc.counterexample->C = eval_psi(kernel, 1.0) * sc.mass;
  }
  return sc;
}

struct ScenarioCheck {
  std::string name;
  bool pass = true;
  std::string detail;
};

/// Independent re-check of a scenario's kind invariants on its grid arrays.
inline std::vector<ScenarioCheck> check_scenario(const Scenario& sc) {
  std::vector<ScenarioCheck> out;
  const auto& s = sc.initial;
  const int n = s.size();
  auto add = [&](std::string name, bool ok, std::string d = "") { out.push_back({std::move(name), ok, std::move(d)}); };
  double rmin = 1e300, gmin = 1e300, gmax = -1e300;
  for (int i = 0; i < n; ++i) {
    rmin = std::min(rmin, s.rho[i]);
    gmin = std::min(gmin, s.g[i]);
    gmax = std::max(gmax, s.g[i]);
  }
  add("rho0 >= 0", rmin >= 0.0);
  add("mass > 0", s.mass() > 0.0);
  const double gscale = std::max(max_abs(s.g), 1e-300);
  switch (sc.kind) {
    case ScenarioKind::subcritical: add("min G0 > 0", gmin > 0.0, std::to_string(gmin)); break;
    case ScenarioKind::supercritical: add("min G0 < 0", gmin < 0.0, std::to_string(gmin)); break;
    case ScenarioKind::critical_interval:
    case ScenarioKind::bounded_baseline: {
      add("G0 >= 0", gmin >= 0.0, std::to_string(gmin));
      bool zero = true, floor = true;
      for (int i = 0; i < n; ++i) {
        const double x = s.grid.center(i);
        if (x >= *sc.a && x <= *sc.b) {
          zero = zero && s.g[i] == 0.0;
          floor = floor && s.rho[i] >= *sc.c * (1 - 1e-14);
        }
      }
      add("G0 = 0 on [a,b]", zero);
      add("rho0 >= c on [a,b]", floor);
      break;
    }
    case ScenarioKind::critical_regular: {
      double qmax = 0.0;
      bool ok = true;
      for (int i = 0; i < n; ++i) {
        if (s.g[i] > 0) qmax = std::max(qmax, s.rho[i] / s.g[i]);
        else if (s.rho[i] > 0) ok = false;
      }
      add("rho0 = q0 G0 with bounded q0", ok && std::isfinite(qmax), std::to_string(qmax));
      break;
    }
    case ScenarioKind::pure_aggregation: add("G0 = 0", max_abs(s.g) == 0.0); break;
    case ScenarioKind::separated_supports: {
      double rho_hi = -1e300, g_lo = 1e300;
      for (int i = 0; i < n; ++i) {
        if (s.rho[i] > 0) rho_hi = std::max(rho_hi, s.grid.face(i + 1));
        if (s.g[i] != 0) g_lo = std::min(g_lo, s.grid.face(i));
      }
      add("dist(supp rho0, supp G0) >= L - 1", g_lo - rho_hi >= sc.counterexample->L - 1.0 - 2 * s.grid.dx,
          std::to_string(g_lo - rho_hi));
      break;
    }
    case ScenarioKind::threshold: break;
  }
  (void)gmax;
  (void)gscale;
  if (s.grid.periodic()) {
    const GridConvolver conv(sc.kernel, s.grid, Sampling::cell_average);
    const auto cv = full_convolution(conv, s.rho, s.mass());
    const auto res = compatibility_residual(s, cv);
    add("torus compatibility", std::abs(res.residual) <= 1e-12 * std::max(1.0, res.scale),
        std::to_string(res.residual));
  } else {
    const double band = 2.0 * tail_length(sc.kernel);
    double edge = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = s.grid.center(i);
      if (x - s.grid.domain.x_min < band || s.grid.domain.x_max - x < band) edge += s.rho[i] * s.grid.dx;
    }
    add("mass inside window margins", edge == 0.0, std::to_string(edge));
  }
  return out;
}

}  // namespace ealign
