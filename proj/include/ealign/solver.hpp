#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ealign/convolution.hpp"
#include "ealign/error.hpp"
#include "ealign/fields.hpp"
#include "ealign/kernels.hpp"
#include "ealign/trajectory.hpp"

namespace ealign {

enum class Scheme { eulerian_fv, lagrangian_cs, both };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::eulerian_fv: return "eulerian_fv";
    case Scheme::lagrangian_cs: return "lagrangian_cs";
    case Scheme::both: return "both";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view s) {
  for (auto v : {Scheme::eulerian_fv, Scheme::lagrangian_cs, Scheme::both}) {
    if (to_string(v) == s) return v;
  }
  throw InputError("unknown scheme '" + std::string(s) + "'");
}

struct SolverConfig {
  Scheme scheme = Scheme::both;
  double cfl = 0.5;
  double t_max = 1.0;
  double dt_min = 1e-13;
  double dt_max = 0.05;
  double g_floor = -1e6;
  double rho_ceiling = 1e6;
  double gap_floor_factor = 1e-8;  ///< gap_floor = factor * initial min gap
  double snapshot_dt = 0.1;
  int n_particles = 512;
  double shock_fraction = 0.25;  ///< grid fallback: one-cell velocity drop / velocity range
  double mass_fraction = 0.25;   ///< grid fallback: single-cell share of total mass
  double window_margin = 2.0;    ///< in kernel tail lengths
  int fit_samples = 8;
  ConvolutionOptions convolution;

  void validate() const {
    auto fail = [](const std::string& m) { throw InputError("solver: " + m); };
    if (!(cfl > 0.0 && cfl <= 0.9)) fail("cfl must lie in (0, 0.9]");
    if (!(dt_min > 0.0)) fail("dt_min must be positive");
    if (!(dt_max >= dt_min)) fail("dt_max must be at least dt_min");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) fail("t_max must be positive and finite");
    if (!(g_floor < 0.0) || !std::isfinite(g_floor)) fail("g_floor must be negative and finite");
    if (!(rho_ceiling > 0.0) || !std::isfinite(rho_ceiling)) fail("rho_ceiling must be positive and finite");
    if (!(gap_floor_factor > 0.0 && gap_floor_factor < 1.0)) fail("gap_floor_factor must lie in (0, 1)");
    if (!(snapshot_dt > 0.0)) fail("snapshot_dt must be positive");
    if (n_particles < 2 && scheme != Scheme::eulerian_fv) fail("n_particles must be at least 2");
    if (!(shock_fraction > 0.0 && shock_fraction <= 1.0)) fail("shock_fraction must lie in (0, 1]");
    if (!(mass_fraction > 0.0 && mass_fraction <= 1.0)) fail("mass_fraction must lie in (0, 1]");
    if (!(window_margin >= 0.0)) fail("window_margin must be non-negative");
    if (fit_samples < 2) fail("fit_samples must be at least 2");
  }
};

/// First-order upwind finite volumes for rho_t + (rho u)_x = 0 and
/// G_t + (G u)_x = 0 on the recovered velocity, with Heun time stepping.  With a kernel offset c the
/// integrable part Gt = G - c m is advanced with the source -c m u_x.
class EulerianSolver {
 public:
  EulerianSolver(const KernelSpec& k, FieldState init, double momentum, const SolverConfig& cfg,
                 std::vector<double> markers = {})
      : kernel_(k),
        cfg_(cfg),
        conv_(k, init.grid, Sampling::cell_average, cfg.convolution),
        state_(std::move(init)),
        momentum_(momentum),
        markers_(std::move(markers)) {
    state_.validate();
    mass0_ = state_.mass();
    rho0_max_ = *std::max_element(state_.rho.begin(), state_.rho.end());
    refresh();
  }

  const FieldState& state() const { return state_; }
  const VelocityField& velocity() const { return u_; }
  const std::vector<double>& convolution() const { return conv_values_; }
  const std::vector<double>& markers() const { return markers_; }
  double momentum_target() const { return momentum_; }
  double initial_mass() const { return mass0_; }

  /// Largest dt keeping every cell update a convex combination, times cfl.
  double stable_dt() const {
    const int n = state_.size();
    double out = 0.0;
    for (int i = 0; i < n; ++i) {
      out = std::max(out, std::max(u_.faces[i + 1], 0.0) - std::min(u_.faces[i], 0.0));
    }
    if (out <= 0.0) return std::numeric_limits<double>::infinity();
    return cfg_.cfl * state_.grid.dx / out;
  }

  double suggested_dt() const {
    double dt = std::min(stable_dt(), cfg_.dt_max);
    const double ux = u_.max_abs_slope();
    if (ux > 0.0) dt = std::min(dt, 0.1 / ux);
    return dt;
  }

  void step(double dt) {
    const double bound = stable_dt();
    if (!(dt > 0.0)) throw InputError("step: dt must be positive");
    if (dt > bound * (1.0 + 1e-12)) {
      throw CflViolation("step: dt = " + std::to_string(dt) + " exceeds the cfl bound", suggested_dt());
    }
    const auto u_old = u_;
    const FieldState start = state_;
    // SSP-RK2 (Heun) on the upwind operator: a convex combination of two
    // forward-Euler upwind stages, so positivity and conservation carry over
    try {
      upwind_update(state_, u_, dt);
      refresh();
      upwind_update(state_, u_, dt);
    } catch (...) {
      state_ = start;
      refresh();
      throw;
    }
    for (int i = 0; i < state_.size(); ++i) {
      state_.rho[i] = 0.5 * (start.rho[i] + state_.rho[i]);
      state_.g[i] = 0.5 * (start.g[i] + state_.g[i]);
    }
    std::vector<double> predicted(markers_.size());
    std::vector<double> v_old(markers_.size());
    for (std::size_t k = 0; k < markers_.size(); ++k) {
      v_old[k] = interpolate_faces(state_.grid, u_old.faces, markers_[k]);
      predicted[k] = markers_[k] + dt * v_old[k];
    }
    state_.t = start.t + dt;
    ++steps_;
    refresh();
    for (std::size_t k = 0; k < markers_.size(); ++k) {
      markers_[k] += 0.5 * dt * (v_old[k] + interpolate_faces(state_.grid, u_.faces, predicted[k]));
    }
    last_dt_ = dt;
  }

  long steps() const { return steps_; }

  FieldSample sample() const {
    const int n = state_.size();
    const auto& g = state_.grid;
    FieldSample s;
    s.t = state_.t;
    s.dt = last_dt_;
    s.mass = state_.mass();
    s.g_total = state_.g_total();
    s.momentum = momentum(state_, u_);
    s.max_ux = u_.max_abs_slope();
    s.compat_residual = compatibility_residual(state_, conv_values_).residual;
    double rmax = 0.0, gmin = std::numeric_limits<double>::infinity(), gabs = 0.0;
    int imin = 0, irho = 0;
    for (int i = 0; i < n; ++i) {
      if (state_.rho[i] > rmax) {
        rmax = state_.rho[i];
        irho = i;
      }
      if (state_.g[i] < gmin) {
        gmin = state_.g[i];
        imin = i;
      }
      gabs = std::max(gabs, std::abs(state_.g[i]));
    }
    s.max_rho = rmax;
    s.min_g = gmin;
    s.max_abs_g = gabs;
    s.x_min_g = g.center(imin);
    s.x_max_rho = g.center(irho);
    s.max_cell_mass = rmax * g.dx / std::max(s.mass, 1e-300);
    // material region: the whole torus, or on a window the interval between
    // the mass quantiles q and 1 - q, which moves with the flow; upwind
    // residue outside it is ignored
    double umin = std::numeric_limits<double>::infinity(), umax = -umin;
    double drop = 0.0;
    if (g.periodic()) {
      for (int i = 0; i < n; ++i) {
        umin = std::min(umin, u_.centers[i]);
        umax = std::max(umax, u_.centers[i]);
        drop = std::max(drop, u_.faces[i] - u_.faces[i + 1]);
      }
    } else {
      const long double q = 1e-6L * s.mass;
      std::vector<long double> cum(n + 1, 0.0L);
      for (int i = 0; i < n; ++i) cum[i + 1] = cum[i] + static_cast<long double>(state_.rho[i]) * g.dx;
      const double x_lo = mass_quantile(state_, cum, q), x_hi = mass_quantile(state_, cum, cum[n] - q);
      for (double x : {x_lo, x_hi}) {
        const double v = interpolate_faces(g, u_.faces, x);
        umin = std::min(umin, v);
        umax = std::max(umax, v);
      }
      for (int i = 0; i < n; ++i) {
        if (g.face(i + 1) <= x_lo || g.face(i) >= x_hi) continue;
        drop = std::max(drop, u_.faces[i] - u_.faces[i + 1]);
        if (g.face(i) > x_lo) {
          umin = std::min(umin, u_.faces[i]);
          umax = std::max(umax, u_.faces[i]);
        }
      }
    }
    s.min_u = umin;
    s.max_u = umax;
    s.jump_ratio = umax > umin ? drop / (umax - umin) : 0.0;
    if (!g.periodic()) {
      const double band = cfg_.window_margin * tail_length(kernel_);
      long double mm = 0;
      for (int i = 0; i < n; ++i) {
        const double x = g.center(i);
        if (x - g.domain.x_min < band || g.domain.x_max - x < band) mm += state_.rho[i];
      }
      s.margin_mass = static_cast<double>(mm * g.dx);
    }
    for (double x : markers_) {
      s.marker_x.push_back(x);
      s.marker_rho.push_back(interpolate_centers(g, state_.rho, x));
      s.marker_g.push_back(interpolate_centers(g, state_.g, x));
      s.marker_cum_mass.push_back(cumulative_mass(x));
    }
    return s;
  }

  /// int_{x_min}^{x} rho for piecewise-constant rho, lifted on a torus so it
  /// is continuous and increasing along the real line.
  double cumulative_mass(double x) const {
    const auto& g = state_.grid;
    double periods = 0.0;
    double y = x;
    if (g.periodic()) {
      periods = std::floor((x - g.domain.x_min) / g.domain.length());
      y = x - periods * g.domain.length();
    }
    const double pos = std::clamp((y - g.domain.x_min) / g.dx, 0.0, static_cast<double>(g.n_cells));
    const int full = std::min(static_cast<int>(pos), g.n_cells);
    long double acc = 0;
    for (int i = 0; i < full; ++i) acc += state_.rho[i];
    if (full < g.n_cells) acc += state_.rho[full] * (pos - full);
    return static_cast<double>(acc * g.dx + periods * state_.mass());
  }

  double rho0_max() const { return rho0_max_; }

 private:
  /// Forward-Euler upwind update of s on the face velocities of u.
  void upwind_update(FieldState& s, const VelocityField& u, double dt) const {
    const int n = s.size();
    const double cm = kernel_.offset * mass0_;
    const bool per = s.grid.periodic();
    const auto& uf = u.faces;
    auto q_at = [&](const std::vector<double>& q, int i) {
      if (per) return q[((i % n) + n) % n];
      return q[std::clamp(i, 0, n - 1)];
    };
    std::vector<double> gt(n);
    for (int i = 0; i < n; ++i) gt[i] = s.g[i] - cm;
    std::vector<double> frho(n + 1), fg(n + 1);
    for (int f = 0; f <= n; ++f) {
      const double up = std::max(uf[f], 0.0), dn = std::min(uf[f], 0.0);
      frho[f] = up * q_at(s.rho, f - 1) + dn * q_at(s.rho, f);
      fg[f] = up * q_at(gt, f - 1) + dn * q_at(gt, f);
    }
    if (per) {
      frho[n] = frho[0];
      fg[n] = fg[0];
    }
    const double r = dt / s.grid.dx;
    for (int i = 0; i < n; ++i) {
      s.rho[i] -= r * (frho[i + 1] - frho[i]);
      if (s.rho[i] < 0.0) s.rho[i] = 0.0;
      double gnew = gt[i] - r * (fg[i + 1] - fg[i]);
      if (cm != 0.0) gnew -= r * cm * (uf[i + 1] - uf[i]);
      s.g[i] = gnew + cm;
    }
  }

  void refresh() {
    conv_values_ = full_convolution(conv_, state_.rho, mass0_);
    const int n = state_.size();
    std::vector<double> slope(n);
    for (int i = 0; i < n; ++i) slope[i] = state_.g[i] - conv_values_[i];
    if (state_.grid.periodic()) {
      const auto res = compatibility_residual(state_, conv_values_);
      if (!res.ok()) {
        throw CompatibilityError("torus state incompatible: int (G - psi*rho) = " +
                                     std::to_string(res.residual),
                                 res.residual);
      }
      const double mean = res.residual / state_.grid.domain.length();
      for (double& v : slope) v -= mean;
    }
    u_ = integrate_slope(state_, std::move(slope), momentum_);
  }

  KernelSpec kernel_;
  SolverConfig cfg_;
  GridConvolver conv_;
  FieldState state_;
  double momentum_;
  std::vector<double> markers_;
  double mass0_ = 0.0;
  double rho0_max_ = 0.0;
  VelocityField u_;
  std::vector<double> conv_values_;
  double last_dt_ = 0.0;
  long steps_ = 0;
};

/// One upwind step of a state; throws CflViolation when dt is too large.
inline FieldState step_eulerian(const KernelSpec& k, const FieldState& s, double momentum, double dt,
                                const SolverConfig& cfg = {}) {
  EulerianSolver solver(k, s, momentum, cfg);
  solver.step(dt);
  return solver.state();
}

struct Collision {
  double t = 0.0;
  int index = -1;  ///< left particle of the collapsed gap
  double gap = 0.0;
};

/// Cucker-Smale particles advanced by classical RK4 together with the
/// carried values rho_i, G_i (d/dt = -u_x value, u_x = G_i - psi * rho(x_i)).
/// psi * rho at particles integrates psi exactly against the Voronoi
/// reconstruction of the ensemble.
class LagrangianSolver {
 public:
  struct Rates {
    std::vector<double> x, v, rho, g;
    std::vector<double> ux;
    double max_relax = 0.0;  ///< max_i sum_j m_j psi(r_ij)
  };

  LagrangianSolver(const KernelSpec& k, ParticleEnsemble init, const SolverConfig& cfg)
      : kernel_(k), cfg_(cfg), prim_(k, init.domain), ens_(std::move(init)) {
    check_ordering(ens_);
    mass_ = ens_.total_mass();
    momentum_ = ens_.total_momentum();
    gap_floor_ = cfg_.gap_floor_factor * ens_.min_gap();
    last_ = rates(ens_.x, ens_.v, ens_.rho, ens_.g);
  }

  const ParticleEnsemble& ensemble() const { return ens_; }
  double gap_floor() const { return gap_floor_; }
  const std::vector<double>& ux() const { return last_.ux; }

  double suggested_dt() const {
    double dt = cfg_.dt_max;
    double dmax = 0.0;
    for (double d : last_.ux) dmax = std::max(dmax, std::abs(d));
    if (dmax > 0.0) dt = std::min(dt, 0.1 / dmax);
    // cfl times the earliest straight-line meeting time of neighbours
    const int n = ens_.size();
    const int last = ens_.domain.periodic() ? n : n - 1;
    for (int i = 0; i < last; ++i) {
      const double closing = ens_.v[i] - ens_.v[(i + 1) % n];
      if (closing > 0.0) dt = std::min(dt, cfg_.cfl * ens_.gap(i) / closing);
    }
    if (last_.max_relax > 0.0) dt = std::min(dt, 1.0 / last_.max_relax);
    return dt;
  }

  /// Advances in place; on collision the ensemble is left untouched.
  std::optional<Collision> step(double dt) {
    const int n = ens_.size();
    auto axpy = [&](const std::vector<double>& a, const std::vector<double>& b, double h) {
      std::vector<double> r(n);
      for (int i = 0; i < n; ++i) r[i] = a[i] + h * b[i];
      return r;
    };
    const Rates& k1 = last_;
    const Rates k2 = rates(axpy(ens_.x, k1.x, dt / 2), axpy(ens_.v, k1.v, dt / 2),
                           axpy(ens_.rho, k1.rho, dt / 2), axpy(ens_.g, k1.g, dt / 2));
    const Rates k3 = rates(axpy(ens_.x, k2.x, dt / 2), axpy(ens_.v, k2.v, dt / 2),
                           axpy(ens_.rho, k2.rho, dt / 2), axpy(ens_.g, k2.g, dt / 2));
    const Rates k4 = rates(axpy(ens_.x, k3.x, dt), axpy(ens_.v, k3.v, dt), axpy(ens_.rho, k3.rho, dt),
                           axpy(ens_.g, k3.g, dt));
    ParticleEnsemble next = ens_;
    for (int i = 0; i < n; ++i) {
      next.x[i] += dt / 6 * (k1.x[i] + 2 * k2.x[i] + 2 * k3.x[i] + k4.x[i]);
      next.v[i] += dt / 6 * (k1.v[i] + 2 * k2.v[i] + 2 * k3.v[i] + k4.v[i]);
      next.rho[i] += dt / 6 * (k1.rho[i] + 2 * k2.rho[i] + 2 * k3.rho[i] + k4.rho[i]);
      next.g[i] += dt / 6 * (k1.g[i] + 2 * k2.g[i] + 2 * k3.g[i] + k4.g[i]);
    }
    next.t = ens_.t + dt;
    const int last = next.domain.periodic() ? n : n - 1;
    for (int i = 0; i < last; ++i) {
      const double gp = next.gap(i);
      if (!(gp > gap_floor_)) return Collision{next.t, i, gp};
    }
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(next.v[i]) || !std::isfinite(next.rho[i]) || !std::isfinite(next.g[i])) {
        return Collision{next.t, i, 0.0};
      }
    }
    ens_ = std::move(next);
    last_ = rates(ens_.x, ens_.v, ens_.rho, ens_.g);
    last_dt_ = dt;
    return std::nullopt;
  }

  ParticleSample sample(std::span<const int> tracked) const {
    ParticleSample s;
    const int n = ens_.size();
    s.t = ens_.t;
    s.dt = last_dt_;
    s.mass = ens_.total_mass();
    s.momentum = ens_.total_momentum();
    s.min_g = std::numeric_limits<double>::infinity();
    s.min_v = std::numeric_limits<double>::infinity();
    s.max_v = -s.min_v;
    s.min_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (ens_.g[i] < s.min_g) {
        s.min_g = ens_.g[i];
        s.x_min_g = ens_.x[i];
      }
      if (ens_.rho[i] > s.max_rho) {
        s.max_rho = ens_.rho[i];
        s.x_max_rho = ens_.x[i];
      }
      s.max_abs_g = std::max(s.max_abs_g, std::abs(ens_.g[i]));
      s.max_ux = std::max(s.max_ux, std::abs(last_.ux[i]));
      s.min_v = std::min(s.min_v, ens_.v[i]);
      s.max_v = std::max(s.max_v, ens_.v[i]);
      const double gp = ens_.gap(i);
      if (gp < s.min_gap) {
        s.min_gap = gp;
        s.x_min_gap = ens_.x[i] + 0.5 * gp;
      }
    }
    for (int i : tracked) {
      s.tracked_x.push_back(ens_.x[i]);
      s.tracked_rho.push_back(ens_.rho[i]);
      s.tracked_g.push_back(ens_.g[i]);
    }
    return s;
  }

  /// psi * rho at each particle from the Voronoi reconstruction (offset included).
  std::vector<double> convolution_at_particles(std::span<const double> x) const {
    const int n = static_cast<int>(x.size());
    std::vector<double> b(n + 1), dens(n);
    for (int i = 1; i < n; ++i) b[i] = 0.5 * (x[i - 1] + x[i]);
    if (ens_.domain.periodic()) {
      const double wrap = x[0] + ens_.domain.length() - x[n - 1];
      b[0] = x[0] - 0.5 * wrap;
      b[n] = x[n - 1] + 0.5 * wrap;
    } else {
      b[0] = x[0] - 0.5 * (x[1] - x[0]);
      b[n] = x[n - 1] + 0.5 * (x[n - 1] - x[n - 2]);
    }
    for (int j = 0; j < n; ++j) dens[j] = ens_.m[j] / (b[j + 1] - b[j]);
    std::vector<double> out(n);
    std::vector<double> sv(n + 1);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k <= n; ++k) sv[k] = prim_.first(x[i] - b[k]);
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += dens[j] * (sv[j] - sv[j + 1]);
      out[i] = acc + kernel_.offset * mass_;
    }
    return out;
  }

 private:
  static void check_ordering(const ParticleEnsemble& e) {
    if (e.size() < 2) throw InputError("particle ensemble needs at least 2 particles");
    for (int i = 0; i + 1 < e.size(); ++i) {
      if (!(e.x[i + 1] > e.x[i])) throw InputError("particle positions must be strictly increasing");
    }
    if (e.domain.periodic() && !(e.x.back() < e.x.front() + e.domain.length())) {
      throw InputError("torus particles must span less than one period");
    }
  }

  Rates rates(const std::vector<double>& x, const std::vector<double>& v, const std::vector<double>& rho,
              const std::vector<double>& g) const {
    const int n = static_cast<int>(x.size());
    Rates r;
    r.x = v;
    r.v.assign(n, 0.0);
    std::vector<double> relax(n, 0.0);
    const bool per = ens_.domain.periodic();
    const double len = ens_.domain.length();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double d = x[j] - x[i];
        if (per && d > 0.5 * len) d = len - d;
        const double w = psi0(kernel_, d);
        const double dv = v[j] - v[i];
        r.v[i] += ens_.m[j] * w * dv;
        r.v[j] -= ens_.m[i] * w * dv;
        relax[i] += ens_.m[j] * w;
        relax[j] += ens_.m[i] * w;
      }
    }
    if (kernel_.offset != 0.0) {
      for (int i = 0; i < n; ++i) r.v[i] += kernel_.offset * (momentum_ - mass_ * v[i]);
    }
    for (int i = 0; i < n; ++i) r.max_relax = std::max(r.max_relax, relax[i] + kernel_.offset * mass_);
    const auto conv = convolution_at_particles(x);
    r.ux.resize(n);
    r.rho.resize(n);
    r.g.resize(n);
    for (int i = 0; i < n; ++i) {
      r.ux[i] = g[i] - conv[i];
      r.rho[i] = -r.ux[i] * rho[i];
      r.g[i] = -r.ux[i] * g[i];
    }
    return r;
  }

  KernelSpec kernel_;
  SolverConfig cfg_;
  DomainPrimitive<double> prim_;
  ParticleEnsemble ens_;
  double mass_ = 0.0;
  double momentum_ = 0.0;
  double gap_floor_ = 0.0;
  Rates last_;
  double last_dt_ = 0.0;
};

/// One RK4 step; a collapsed gap is returned as a Collision instead of a state.
inline std::variant<ParticleEnsemble, Collision> step_lagrangian(const KernelSpec& k,
                                                                  const ParticleEnsemble& e, double dt,
                                                                  const SolverConfig& cfg = {}) {
  LagrangianSolver solver(k, e, cfg);
  if (auto c = solver.step(dt)) return *c;
  return solver.ensemble();
}

namespace detail {

template <class Sample, class F>
double fitted_time(std::span<const Sample> series, int n_fit, F indicator) {
  const std::size_t n = series.size();
  const std::size_t k = std::min<std::size_t>(n, static_cast<std::size_t>(n_fit));
  std::vector<double> t, y;
  for (std::size_t i = n - k; i < n; ++i) {
    t.push_back(series[i].t);
    y.push_back(indicator(series[i]));
  }
  const double last = series.back().t;
  const auto root = extrapolate_zero(t, y);
  return root ? std::max(*root, last) : last;
}

}  // namespace detail

/// Blowup test on particle diagnostics.
inline std::optional<BlowupEvent> detect_blowup(std::span<const ParticleSample> series,
                                                const ParticleEnsemble& e, const SolverConfig& cfg,
                                                double gap_floor) {
  if (series.empty()) throw PreconditionError("detect_blowup needs a non-empty series");
  const auto& s = series.back();
  const int nf = cfg.fit_samples;
  if (s.min_g < cfg.g_floor) {
    return BlowupEvent{BlowupKind::g_divergence,
                       detail::fitted_time(series, nf, [](const ParticleSample& p) { return 1.0 / std::abs(p.min_g); }),
                       s.t, s.x_min_g};
  }
  if (s.max_rho > cfg.rho_ceiling) {
    return BlowupEvent{BlowupKind::density_concentration,
                       detail::fitted_time(series, nf, [](const ParticleSample& p) { return 1.0 / p.max_rho; }), s.t,
                       s.x_max_rho};
  }
  const bool shrinking = series.size() >= 2 && s.min_gap < series[series.size() - 2].min_gap;
  if (s.min_gap <= gap_floor || (s.min_gap <= 10.0 * gap_floor && shrinking)) {
    return BlowupEvent{BlowupKind::characteristic_collision,
                       detail::fitted_time(series, nf, [](const ParticleSample& p) { return p.min_gap; }), s.t,
                       s.x_min_gap};
  }
  (void)e;
  return std::nullopt;
}

/// Blowup test on grid diagnostics (Eulerian-only runs).  Beyond the
/// thresholds, a grid cannot resolve concentration past its own scale, so a
/// one-cell velocity jump or a single cell holding a large share of the mass
/// count as shock / concentration.
inline std::optional<BlowupEvent> detect_blowup(std::span<const FieldSample> series, const FieldState& s,
                                                const SolverConfig& cfg) {
  if (series.empty()) throw PreconditionError("detect_blowup needs a non-empty series");
  const auto& f = series.back();
  const int nf = cfg.fit_samples;
  (void)s;
  if (f.min_g < cfg.g_floor) {
    return BlowupEvent{BlowupKind::g_divergence,
                       detail::fitted_time(series, nf, [](const FieldSample& p) { return 1.0 / std::abs(p.min_g); }),
                       f.t, f.x_min_g};
  }
  if (f.max_rho > cfg.rho_ceiling || f.max_cell_mass >= cfg.mass_fraction) {
    return BlowupEvent{BlowupKind::density_concentration,
                       detail::fitted_time(series, nf, [](const FieldSample& p) { return 1.0 / p.max_rho; }), f.t,
                       f.x_max_rho};
  }
  if (f.jump_ratio >= cfg.shock_fraction) {
    return BlowupEvent{BlowupKind::shock,
                       detail::fitted_time(series, nf, [](const FieldSample& p) { return 1.0 / p.max_ux; }), f.t,
                       f.x_min_g};
  }
  return std::nullopt;
}

}  // namespace ealign
