#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "ealign/diagnostics.hpp"
#include "ealign/scenarios.hpp"
#include "ealign/trajectory.hpp"

namespace ealign::io {

using nlohmann::json;

/// Everything the report and the figures derive from one trajectory.
struct RunAnalysis {
  TheoremBounds bounds;
  std::optional<Outcome> outcome;
  std::string withheld;  ///< why outcome is empty
  BkmReport bkm;
  std::optional<ConservationReport> conservation;
  std::optional<PairDistanceReport> pair;
  std::string pair_note;
};

inline RunAnalysis analyze(const Scenario& sc, const Trajectory& traj) {
  RunAnalysis a;
  a.bounds = theorem_bounds(sc);
  try {
    a.outcome = classify_outcome(traj, a.bounds);
  } catch (const PreconditionError& e) {
    a.withheld = e.what();
  }
  a.bkm = bkm_report(traj);
  const int nm = static_cast<int>(traj.marker_x0.size());
  try {
    std::vector<std::pair<int, int>> pairs;
    if (nm >= 2) pairs.push_back({0, nm - 1});
    a.conservation = conservation_report(traj, pairs);
  } catch (const PreconditionError& e) {
    a.pair_note = e.what();
  }
  if (sc.a && sc.b && sc.c) {
    try {
      a.pair = pair_distance_bound(traj, *sc.a, *sc.b, sc.kernel, *sc.c);
    } catch (const PreconditionError& e) {
      a.pair_note = e.what();
    }
  }
  return a;
}

inline json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const KernelSpec& k) {
  return {{"family", to_string(k.family)}, {"s", k.s},          {"p", k.tail_exponent},
          {"lambda", k.lower_bound},      {"Lambda", k.upper_bound}, {"c", k.offset}};
}

inline json to_json(const Drift& d) { return {{"initial", d.initial}, {"max_abs", d.max_abs}, {"relative", d.relative}}; }

inline json to_json(const std::optional<Drift>& d) { return d ? to_json(*d) : json(nullptr); }

inline json to_json(const TheoremBounds& tb) {
  json j{{"mass", tb.mass},         {"rho0_max", tb.rho0_max}, {"g0_min", tb.g0_min},     {"g0_max_abs", tb.g0_max_abs},
         {"u0_norm", tb.u0_norm},   {"kernel_l1", tb.kernel_l1}, {"dx", tb.dx},           {"c1", opt(tb.c1)},
         {"c2", tb.c2},             {"c_rho", opt(tb.c_rho)},  {"g_sup", opt(tb.g_sup)},  {"t_super", opt(tb.t_super)},
         {"t_star", opt(tb.t_star)}, {"a", opt(tb.a)},         {"b", opt(tb.b)},          {"c", opt(tb.c)},
         {"notes", tb.notes}};
  if (tb.counterexample) {
    const auto& ce = *tb.counterexample;
    j["counterexample"] = {{"C", ce.C},           {"t_star", ce.t_star},       {"L", ce.L},
                           {"epsilon", ce.epsilon}, {"degenerate", ce.degenerate}, {"note", ce.note}};
  }
  return j;
}

inline json to_json(const Termination& t) {
  json j{{"status", to_string(t.kind)}, {"t_end", t.t_end}, {"reason", t.reason}};
  if (t.kind == TerminationKind::blowup) {
    j["blowup"] = {{"kind", to_string(t.blowup.kind)},
                   {"time_estimate", t.blowup.time_estimate},
                   {"last_resolved_time", t.blowup.last_resolved_time},
                   {"location", t.blowup.location}};
  }
  return j;
}

inline json to_json(const Outcome& o) {
  json checks = json::array();
  for (const auto& c : o.consistency) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"skipped", c.skipped}, {"detail", c.detail}});
  }
  return {{"classification", o.summary()}, {"regime", to_string(o.regime)}, {"consistent", o.consistent()},
          {"checks", checks}};
}

inline json to_json(const BkmReport& b) {
  auto last = [](const std::vector<double>& v) { return v.empty() ? 0.0 : v.back(); };
  return {{"I_full", last(b.i_full)},        {"I_g", last(b.i_g)},           {"I_ux", last(b.i_ux)},
          {"full_diverges", b.full_diverges}, {"g_diverges", b.g_diverges},   {"ux_diverges", b.ux_diverges},
          {"inequality_rhs", b.inequality_rhs}, {"inequality_holds", b.inequality_holds}};
}

inline json to_json(const ConservationReport& c) {
  json pairs = json::array();
  for (const auto& p : c.pairs) {
    pairs.push_back({{"first", p.first},
                     {"second", p.second},
                     {"initial", p.initial},
                     {"max_abs_drift", p.max_abs_drift},
                     {"relative", p.relative},
                     {"particle_drift", p.particle_drift},
                     {"truncated_at", opt(p.truncated_at)},
                     {"note", p.note}});
  }
  return {{"mass", to_json(c.mass)},
          {"momentum", to_json(c.momentum)},
          {"g_total", to_json(c.g_total)},
          {"particle_mass", to_json(c.particle_mass)},
          {"particle_momentum", to_json(c.particle_momentum)},
          {"grid_steps", c.grid_steps},
          {"duration", c.duration},
          {"pairs", pairs}};
}

inline json to_json(const PairDistanceReport& p) {
  return {{"t", p.t},           {"r", p.r},         {"bound", p.bound},
          {"t_star", p.t_star}, {"max_excess", p.max_excess}, {"source", p.source}};
}

inline json report_json(const Scenario& sc, const Trajectory& traj, const RunAnalysis& a) {
  json params = json::object();
  for (const auto& [k, v] : sc.params) params[k] = v;
  json j;
  j["scenario"] = {{"kind", to_string(sc.kind)}, {"mass", sc.mass},       {"momentum", sc.momentum},
                   {"u0_norm", sc.u0_norm},      {"params", params},      {"markers", sc.markers}};
  j["kernel"] = to_json(sc.kernel);
  j["grid"] = {{"domain", to_string(sc.grid.domain.kind)}, {"x_min", sc.grid.domain.x_min},
               {"x_max", sc.grid.domain.x_max},            {"n_cells", sc.grid.n_cells}, {"dx", sc.grid.dx}};
  j["termination"] = to_json(traj.termination());
  j["bounds"] = to_json(a.bounds);
  j["outcome"] = a.outcome ? to_json(*a.outcome) : json(nullptr);
  if (!a.withheld.empty()) j["withheld"] = a.withheld;
  j["bkm"] = to_json(a.bkm);
  j["conservation"] = a.conservation ? to_json(*a.conservation) : json(nullptr);
  j["pair_distance"] = a.pair ? to_json(*a.pair) : json(nullptr);
  if (!a.pair_note.empty()) j["notes"] = {a.pair_note};
  return j;
}

}  // namespace ealign::io
