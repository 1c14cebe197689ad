#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ealign/scenarios.hpp"
#include "ealign/solver.hpp"
#include "ealign/trajectory.hpp"

namespace ealign {

namespace detail {

inline std::vector<int> nearest_particles(const ParticleEnsemble& e, std::span<const double> xs) {
  std::vector<int> out;
  for (double x : xs) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < e.size(); ++i) {
      const double d = std::abs(e.domain.displacement(x, e.x[i]));
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    out.push_back(best);
  }
  return out;
}

inline double margin_band(const KernelSpec& k, const SolverConfig& cfg) {
  return cfg.window_margin * tail_length(k);
}

}  // namespace detail

/// Runs the configured solvers in lockstep to every snapshot time.  Particles
/// advance first; the grid then stops at the same time or at the particle
/// blowup.  In a combined run the grid only watches its hard thresholds.
inline Trajectory run_simulation(const Scenario& sc, const SolverConfig& cfg) {
  cfg.validate();
  Trajectory traj;
  traj.kernel = sc.kernel;
  traj.initial = sc.initial;
  traj.initial_mass = sc.mass;
  traj.initial_momentum = sc.momentum;
  traj.marker_x0 = sc.markers;

  const bool use_grid = cfg.scheme != Scheme::lagrangian_cs;
  const bool use_particles = cfg.scheme != Scheme::eulerian_fv;
  const double m0 = sc.initial.mass();

  std::optional<EulerianSolver> eul;
  std::optional<LagrangianSolver> lag;
  SolverConfig grid_cfg = cfg;
  if (use_particles) {
    grid_cfg.shock_fraction = std::numeric_limits<double>::infinity();
    grid_cfg.mass_fraction = std::numeric_limits<double>::infinity();
  }
  if (use_grid) {
    eul.emplace(sc.kernel, sc.initial, sc.momentum, cfg, sc.markers);
    traj.field_series.push_back(eul->sample());
    traj.field_snapshots.push_back({eul->state(), eul->velocity().centers, eul->convolution()});
  }
  if (use_particles) {
    lag.emplace(sc.kernel, particles_from_fields(sc.kernel, sc.initial, cfg.n_particles, sc.momentum), cfg);
    traj.tracked_particles = detail::nearest_particles(lag->ensemble(), sc.markers);
    traj.particle_series.push_back(lag->sample(traj.tracked_particles));
    traj.particle_snapshots.push_back(lag->ensemble());
  }

  std::optional<BlowupEvent> event;
  std::string abort_reason;
  double t_abort = 0.0;

  auto particles_to = [&](double target) {
    while (lag->ensemble().t < target - 1e-14 * std::max(1.0, target)) {
      const double t = lag->ensemble().t;
      const double dt = std::min(lag->suggested_dt(), target - t);
      if (dt < cfg.dt_min && target - t > cfg.dt_min) {
        event = detect_blowup(std::span<const ParticleSample>(traj.particle_series), lag->ensemble(), cfg,
                              lag->gap_floor());
        if (!event) {
          abort_reason = "particle dt collapsed below dt_min without a confirmed blowup";
          t_abort = t;
        }
        return;
      }
      if (const auto hit = lag->step(dt)) {
        const auto& series = traj.particle_series;
        const double te = detail::fitted_time(std::span<const ParticleSample>(series), cfg.fit_samples,
                                              [](const ParticleSample& p) { return p.min_gap; });
        const auto& e = lag->ensemble();
        event = BlowupEvent{BlowupKind::characteristic_collision, std::max(te, e.t), e.t,
                            e.x[hit->index] + 0.5 * std::max(e.gap(hit->index), 0.0)};
        return;
      }
      traj.particle_series.push_back(lag->sample(traj.tracked_particles));
      event = detect_blowup(std::span<const ParticleSample>(traj.particle_series), lag->ensemble(), cfg,
                            lag->gap_floor());
      if (event) return;
    }
  };

  auto grid_to = [&](double target) {
    while (eul->state().t < target - 1e-14 * std::max(1.0, target)) {
      const double t = eul->state().t;
      const double dt = std::min(eul->suggested_dt(), target - t);
      if (dt < cfg.dt_min && target - t > cfg.dt_min) {
        event = detect_blowup(std::span<const FieldSample>(traj.field_series), eul->state(), cfg);
        if (!event) {
          abort_reason = "grid dt collapsed below dt_min without a confirmed blowup";
          t_abort = t;
        }
        return;
      }
      eul->step(dt);
      traj.field_series.push_back(eul->sample());
      const auto& f = traj.field_series.back();
      if (!eul->state().grid.periodic() && f.margin_mass > 1e-9 * m0) {
        abort_reason = "mass entered the window margin; enlarge the window";
        t_abort = f.t;
        return;
      }
      if (const auto ev = detect_blowup(std::span<const FieldSample>(traj.field_series), eul->state(), grid_cfg)) {
        if (!event) event = ev;
        return;
      }
    }
  };

  const int n_sync = static_cast<int>(std::ceil(cfg.t_max / cfg.snapshot_dt - 1e-9));
  for (int k = 1; k <= n_sync && !event && abort_reason.empty(); ++k) {
    const double t_sync = std::min(cfg.t_max, k * cfg.snapshot_dt);
    double grid_target = t_sync;
    if (lag) {
      particles_to(t_sync);
      if (event) grid_target = std::min(t_sync, event->last_resolved_time);
      if (!abort_reason.empty()) grid_target = std::min(t_sync, t_abort);
    }
    if (eul && grid_target > eul->state().t) grid_to(grid_target);
    if (eul) traj.field_snapshots.push_back({eul->state(), eul->velocity().centers, eul->convolution()});
    if (lag) traj.particle_snapshots.push_back(lag->ensemble());
  }

  if (!abort_reason.empty() && !event) {
    traj.abort(abort_reason, t_abort);
  } else if (event) {
    traj.blowup(*event, event->last_resolved_time);
  } else {
    traj.complete(cfg.t_max);
  }
  return traj;
}

/// Blowup time of the density alone (G0 = 0) from a particle pre-run.
inline std::optional<double> measure_aggregation_time(const KernelSpec& k, const FieldState& rho_only,
                                                      SolverConfig cfg) {
  Scenario sc;
  sc.kind = ScenarioKind::pure_aggregation;
  sc.kernel = k;
  sc.grid = rho_only.grid;
  sc.initial = FieldState(rho_only.grid, rho_only.rho, std::vector<double>(rho_only.size(), 0.0));
  sc.mass = sc.initial.mass();
  cfg.scheme = Scheme::lagrangian_cs;
  const auto traj = run_simulation(sc, cfg);
  if (traj.termination().kind != TerminationKind::blowup) return std::nullopt;
  return traj.termination().blowup.time_estimate;
}

}  // namespace ealign
