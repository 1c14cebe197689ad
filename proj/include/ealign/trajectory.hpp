#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ealign/error.hpp"
#include "ealign/fields.hpp"

namespace ealign {

/// Grid diagnostics at one Eulerian time level.
struct FieldSample {
  double t = 0.0;
  double dt = 0.0;
  double min_g = 0.0;
  double max_abs_g = 0.0;
  double max_rho = 0.0;
  double max_ux = 0.0;
  double min_u = 0.0;  ///< over material cells
  double max_u = 0.0;
  double mass = 0.0;
  double momentum = 0.0;
  double g_total = 0.0;
  double compat_residual = 0.0;
  double x_min_g = 0.0;
  double x_max_rho = 0.0;
  double jump_ratio = 0.0;      ///< largest one-cell velocity drop / velocity range
  double max_cell_mass = 0.0;   ///< largest single-cell mass / total mass
  double margin_mass = 0.0;     ///< mass within the window margins
  std::vector<double> marker_x;
  std::vector<double> marker_rho;
  std::vector<double> marker_g;
  std::vector<double> marker_cum_mass;  ///< int_{x_min}^{X_k} rho (lifted on a torus)
};

/// Particle diagnostics at one Lagrangian time level.
struct ParticleSample {
  double t = 0.0;
  double dt = 0.0;
  double min_g = 0.0;
  double max_abs_g = 0.0;
  double max_rho = 0.0;
  double max_ux = 0.0;  ///< max |G_i - psi * rho(x_i)|
  double min_v = 0.0;
  double max_v = 0.0;
  double mass = 0.0;
  double momentum = 0.0;
  double min_gap = 0.0;
  double x_min_g = 0.0;
  double x_max_rho = 0.0;
  double x_min_gap = 0.0;
  std::vector<double> tracked_x;
  std::vector<double> tracked_rho;
  std::vector<double> tracked_g;
};

enum class BlowupKind { g_divergence, shock, density_concentration, characteristic_collision };

inline std::string_view to_string(BlowupKind k) {
  switch (k) {
    case BlowupKind::g_divergence: return "g_divergence";
    case BlowupKind::shock: return "shock";
    case BlowupKind::density_concentration: return "density_concentration";
    case BlowupKind::characteristic_collision: return "characteristic_collision";
  }
  return "?";
}

struct BlowupEvent {
  BlowupKind kind = BlowupKind::g_divergence;
  double time_estimate = 0.0;
  double last_resolved_time = 0.0;
  double location = 0.0;
};

enum class TerminationKind { running, completed, blowup, aborted };

inline std::string_view to_string(TerminationKind k) {
  switch (k) {
    case TerminationKind::running: return "running";
    case TerminationKind::completed: return "completed";
    case TerminationKind::blowup: return "blowup";
    case TerminationKind::aborted: return "aborted";
  }
  return "?";
}

struct Termination {
  TerminationKind kind = TerminationKind::running;
  BlowupEvent blowup;
  std::string reason;
  double t_end = 0.0;
};

struct FieldSnapshot {
  FieldState state;
  std::vector<double> u;     ///< centers
  std::vector<double> conv;  ///< full psi * rho cell averages
};

struct Trajectory {
  KernelSpec kernel;
  FieldState initial;
  double initial_mass = 0.0;
  double initial_momentum = 0.0;
  std::vector<FieldSnapshot> field_snapshots;
  std::vector<ParticleEnsemble> particle_snapshots;
  std::vector<FieldSample> field_series;
  std::vector<ParticleSample> particle_series;
  std::vector<int> tracked_particles;
  std::vector<double> marker_x0;

  const Termination& termination() const { return termination_; }
  bool terminated() const { return termination_.kind != TerminationKind::running; }

  void complete(double t) { set({TerminationKind::completed, {}, "", t}); }
  void blowup(const BlowupEvent& e, double t) { set({TerminationKind::blowup, e, "", t}); }
  void abort(std::string reason, double t) { set({TerminationKind::aborted, {}, std::move(reason), t}); }

  bool has_fields() const { return !field_series.empty(); }
  bool has_particles() const { return !particle_series.empty(); }

 private:
  void set(Termination t) {
    if (terminated()) throw Error("trajectory termination already set");
    termination_ = std::move(t);
  }
  Termination termination_;
};

/// Least-squares line through (t_i, y_i); returns the t where it crosses zero,
/// or nullopt when the fit is flat or rising.
inline std::optional<double> extrapolate_zero(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size();
  if (n < 2) return std::nullopt;
  long double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    st += t[i];
    sy += y[i];
    stt += static_cast<long double>(t[i]) * t[i];
    sty += static_cast<long double>(t[i]) * y[i];
  }
  const long double den = n * stt - st * st;
  if (den <= 0) return std::nullopt;
  const long double slope = (n * sty - st * sy) / den;
  if (!(slope < 0)) return std::nullopt;
  const long double icpt = (sy - slope * st) / n;
  return static_cast<double>(-icpt / slope);
}

}  // namespace ealign
