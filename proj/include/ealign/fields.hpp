#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "ealign/convolution.hpp"
#include "ealign/error.hpp"
#include "ealign/grid.hpp"
#include "ealign/kernels.hpp"

namespace ealign {

/// Grid-sampled rho and G at one time.  Cell values are averages; g is the
/// full G = u_x + psi * rho (including any constant kernel offset times mass).
struct FieldState {
  double t = 0.0;
  Grid1D grid;
  std::vector<double> rho;
  std::vector<double> g;

  FieldState() = default;
  FieldState(Grid1D gr, std::vector<double> r, std::vector<double> gg, double time = 0.0)
      : t(time), grid(gr), rho(std::move(r)), g(std::move(gg)) {}

  int size() const { return grid.n_cells; }

  double mass() const {
    long double s = 0;
    for (double r : rho) s += r;
    return static_cast<double>(s * grid.dx);
  }
  double g_total() const {
    long double s = 0;
    for (double v : g) s += v;
    return static_cast<double>(s * grid.dx);
  }

  /// Throws InputError on size mismatch, non-finite entries or negative rho.
  void validate() const {
    const auto n = static_cast<std::size_t>(grid.n_cells);
    if (rho.size() != n || g.size() != n) throw InputError("field arrays must have n_cells entries");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(rho[i]) || !std::isfinite(g[i])) {
        throw InputError("non-finite field entry at cell " + std::to_string(i));
      }
      if (rho[i] < 0.0) throw InputError("negative density at cell " + std::to_string(i));
    }
    const double m = mass();
    if (!(m > 0.0) || !std::isfinite(m)) throw InputError("field mass must be positive and finite");
  }
};

/// Recovered velocity: faces has n+1 entries (faces[n] == faces[0] on a
/// torus), centers and slope have n.
struct VelocityField {
  std::vector<double> faces;
  std::vector<double> centers;
  std::vector<double> slope;

  double max_abs_slope() const {
    double v = 0.0;
    for (double s : slope) v = std::max(v, std::abs(s));
    return v;
  }
};

/// Full psi * rho cell averages (offset included).
inline std::vector<double> full_convolution(const GridConvolver& conv, std::span<const double> rho,
                                            double mass) {
  auto c = conv.apply(rho);
  const double off = conv.kernel().offset * mass;
  if (off != 0.0) {
    for (double& v : c) v += off;
  }
  return c;
}

/// Relative tolerance on the torus compatibility residual.
inline constexpr double compatibility_tolerance = 1e-9;

struct CompatibilityResidual {
  double residual = 0.0;  ///< int (G - psi * rho)
  double scale = 0.0;     ///< int |G| + int psi * rho
  bool ok() const { return std::abs(residual) <= compatibility_tolerance * std::max(scale, 1e-300); }
};

inline CompatibilityResidual compatibility_residual(const FieldState& s, std::span<const double> conv) {
  long double r = 0, sc = 0;
  for (int i = 0; i < s.size(); ++i) {
    r += s.g[i] - conv[i];
    sc += std::abs(s.g[i]) + std::abs(conv[i]);
  }
  return {static_cast<double>(r * s.grid.dx), static_cast<double>(sc * s.grid.dx)};
}

/// Builds u with u_x = slope cellwise, anchored so that int rho u = momentum.
inline VelocityField integrate_slope(const FieldState& s, std::vector<double> slope,
                                     double momentum_target) {
  const int n = s.size();
  const double dx = s.grid.dx;
  VelocityField v;
  v.faces.assign(n + 1, 0.0);
  long double acc = 0;
  for (int i = 0; i < n; ++i) {
    acc += static_cast<long double>(dx) * slope[i];
    v.faces[i + 1] = static_cast<double>(acc);
  }
  v.centers.resize(n);
  long double p = 0, m = 0;
  for (int i = 0; i < n; ++i) {
    v.centers[i] = 0.5 * (v.faces[i] + v.faces[i + 1]);
    p += static_cast<long double>(s.rho[i]) * v.centers[i];
    m += s.rho[i];
  }
  const double shift = static_cast<double>((momentum_target / dx - p) / m);
  for (double& f : v.faces) f += shift;
  for (double& c : v.centers) c += shift;
  if (s.grid.periodic()) v.faces[n] = v.faces[0];
  v.slope = std::move(slope);
  return v;
}

/// Closes the (rho, G) system: u_x = G - psi * rho, cumulatively integrated
/// from cell averages of the convolution, free constant fixed by momentum.
inline VelocityField recover_velocity(const FieldState& s, const GridConvolver& conv,
                                      double momentum_target) {
  const int n = s.size();
  const auto c = full_convolution(conv, s.rho, s.mass());
  std::vector<double> slope(n);
  for (int i = 0; i < n; ++i) slope[i] = s.g[i] - c[i];
  if (s.grid.periodic()) {
    const auto res = compatibility_residual(s, c);
    if (!res.ok()) {
      throw CompatibilityError("torus state incompatible: int (G - psi*rho) = " +
                                   std::to_string(res.residual) + " (no periodic velocity exists)",
                               res.residual);
    }
    const double mean = res.residual / s.grid.domain.length();
    for (double& v : slope) v -= mean;
  }
  return integrate_slope(s, std::move(slope), momentum_target);
}

inline VelocityField recover_velocity(const KernelSpec& k, const FieldState& s,
                                      double momentum_target) {
  const GridConvolver conv(k, s.grid, Sampling::cell_average);
  return recover_velocity(s, conv, momentum_target);
}

/// -K' * rho from exact cell first moments, reported on faces and as face
/// averages at centers (the same staggering recover_velocity uses), with no
/// anchoring shift.
inline VelocityField aggregation_velocity(const KernelSpec& k, const FieldState& s) {
  const int n = s.size();
  VelocityField v;
  v.faces = aggregation_face_velocity(k, s.grid, s.rho);
  if (s.grid.periodic()) v.faces.push_back(v.faces[0]);
  v.centers.resize(n);
  v.slope.resize(n);
  for (int i = 0; i < n; ++i) {
    v.centers[i] = 0.5 * (v.faces[i] + v.faces[i + 1]);
    v.slope[i] = (v.faces[i + 1] - v.faces[i]) / s.grid.dx;
  }
  return v;
}

inline double momentum(const FieldState& s, const VelocityField& v) {
  long double p = 0;
  for (int i = 0; i < s.size(); ++i) p += static_cast<long double>(s.rho[i]) * v.centers[i];
  return static_cast<double>(p * s.grid.dx);
}

/// Linear interpolation of center-sampled values (periodic on a torus,
/// constant extension on a window).
inline double interpolate_centers(const Grid1D& grid, std::span<const double> values, double x) {
  const int n = grid.n_cells;
  const double y = (grid.domain.wrap(x) - grid.domain.x_min) / grid.dx - 0.5;
  const double fl = std::floor(y);
  int i0 = static_cast<int>(fl);
  const double w = y - fl;
  if (grid.periodic()) {
    const int a = ((i0 % n) + n) % n;
    const int b = (a + 1) % n;
    return (1 - w) * values[a] + w * values[b];
  }
  if (i0 < 0) return values[0];
  if (i0 >= n - 1) return values[n - 1];
  return (1 - w) * values[i0] + w * values[i0 + 1];
}

/// Linear interpolation of face-sampled velocity (n+1 entries).
inline double interpolate_faces(const Grid1D& grid, std::span<const double> faces, double x) {
  const int n = grid.n_cells;
  double y = (grid.domain.wrap(x) - grid.domain.x_min) / grid.dx;
  if (!grid.periodic()) y = std::clamp(y, 0.0, static_cast<double>(n));
  int i = std::min(static_cast<int>(std::floor(y)), n - 1);
  i = std::max(i, 0);
  const double w = y - i;
  return (1 - w) * faces[i] + w * faces[i + 1];
}

/// Cucker-Smale particles with carried rho_i, G_i (full G).  x is strictly
/// increasing; on a torus it is a lifted coordinate with x[n-1] < x[0] + L.
struct ParticleEnsemble {
  double t = 0.0;
  Domain domain;
  std::vector<double> x;
  std::vector<double> m;
  std::vector<double> v;
  std::vector<double> rho;
  std::vector<double> g;

  int size() const { return static_cast<int>(x.size()); }

  double total_mass() const {
    long double s = 0;
    for (double mi : m) s += mi;
    return static_cast<double>(s);
  }
  double total_momentum() const {
    long double s = 0;
    for (int i = 0; i < size(); ++i) s += static_cast<long double>(m[i]) * v[i];
    return static_cast<double>(s);
  }

  /// Gap between particle i and i+1 (wrapping on a torus).
  double gap(int i) const {
    const int n = size();
    if (i < n - 1) return x[i + 1] - x[i];
    return domain.periodic() ? x[0] + domain.length() - x[n - 1]
                             : std::numeric_limits<double>::infinity();
  }
  double min_gap() const {
    double g0 = std::numeric_limits<double>::infinity();
    const int last = domain.periodic() ? size() : size() - 1;
    for (int i = 0; i < last; ++i) g0 = std::min(g0, gap(i));
    return g0;
  }
};

/// Cumulative mass inverse for piecewise-constant rho.
inline double mass_quantile(const FieldState& s, std::span<const long double> cum, long double target) {
  const int n = s.size();
  auto it = std::lower_bound(cum.begin() + 1, cum.end(), target);
  int j = static_cast<int>(it - cum.begin()) - 1;
  j = std::clamp(j, 0, n - 1);
  while (j < n - 1 && s.rho[j] == 0.0) ++j;
  const long double cell = static_cast<long double>(s.rho[j]) * s.grid.dx;
  long double frac = cell > 0 ? (target - cum[j]) / cell : 0.5L;
  frac = std::clamp(frac, 0.0L, 1.0L);
  return static_cast<double>(s.grid.face(j) + frac * s.grid.dx);
}

/// N equal-mass particles at the (i + 1/2)/N mass quantiles, velocities from
/// the recovered field (shifted so sum m_i v_i equals the target momentum),
/// carried rho_i, G_i interpolated from cell values.
inline ParticleEnsemble particles_from_fields(const FieldState& s, const VelocityField& u,
                                              int n_particles, double momentum_target) {
  if (n_particles < 2) throw InputError("particles_from_fields needs at least 2 particles");
  const int n = s.size();
  std::vector<long double> cum(n + 1, 0.0L);
  for (int j = 0; j < n; ++j) cum[j + 1] = cum[j] + static_cast<long double>(s.rho[j]) * s.grid.dx;
  const long double total = cum[n];
  if (!(total > 0)) throw InputError("particles_from_fields: mass must be positive");
  ParticleEnsemble e;
  e.t = s.t;
  e.domain = s.grid.domain;
  e.x.resize(n_particles);
  e.m.assign(n_particles, static_cast<double>(total / n_particles));
  e.v.resize(n_particles);
  e.rho.resize(n_particles);
  e.g.resize(n_particles);
  for (int i = 0; i < n_particles; ++i) {
    e.x[i] = mass_quantile(s, cum, total * (i + 0.5L) / n_particles);
    e.v[i] = interpolate_faces(s.grid, u.faces, e.x[i]);
    e.rho[i] = interpolate_centers(s.grid, s.rho, e.x[i]);
    e.g[i] = interpolate_centers(s.grid, s.g, e.x[i]);
  }
  const double shift = (momentum_target - e.total_momentum()) / e.total_mass();
  for (double& vi : e.v) vi += shift;
  return e;
}

/// Same placement, but velocities from the particle analogue of
/// u = int G - S * rho with point masses in place of rho, so that neighbours
/// inherit the exact sign of int G between them.
inline ParticleEnsemble particles_from_fields(const KernelSpec& k, const FieldState& s,
                                              int n_particles, double momentum_target) {
  using LD = long double;
  auto e = particles_from_fields(s, recover_velocity(k, s, momentum_target), n_particles,
                                 momentum_target);
  const auto& grid = s.grid;
  const int n = grid.n_cells;
  const bool per = grid.periodic();
  const LD len = grid.domain.length();
  const DomainPrimitive<LD> prim(k, grid.domain);
  std::vector<LD> cg(n + 1, 0.0L);
  for (int j = 0; j < n; ++j) cg[j + 1] = cg[j] + static_cast<LD>(s.g[j]) * grid.dx;
  auto g_int = [&](LD x) {
    LD periods = 0;
    if (per) {
      periods = std::floor((x - grid.domain.x_min) / len);
      x -= periods * len;
    }
    const LD pos = (x - grid.domain.x_min) / grid.dx;
    const int j = std::clamp(static_cast<int>(std::floor(pos)), 0, n - 1);
    return cg[j] + s.g[j] * (x - grid.face(j)) + periods * cg[n];
  };
  const LD g_slope = per ? cg[n] / len : 0.0L;
  const LD kappa = per ? prim.period_mass() / len : -static_cast<LD>(k.offset);
  const int np = e.size();
  for (int i = 0; i < np; ++i) {
    LD acc = g_int(e.x[i]) - g_slope * e.x[i];
    for (int j = 0; j < np; ++j) {
      const LD z = static_cast<LD>(e.x[i]) - e.x[j];
      acc -= e.m[j] * (prim.first(z) - kappa * z);
    }
    e.v[i] = static_cast<double>(acc);
  }
  const double shift = (momentum_target - e.total_momentum()) / e.total_mass();
  for (double& vi : e.v) vi += shift;
  return e;
}

/// Voronoi cells [left_i, right_i] of the particles: midpoints between
/// neighbours; end cells on a window mirror the adjacent gap.
struct VoronoiCells {
  std::vector<double> left;
  std::vector<double> right;
  std::vector<double> density;  ///< m_i / width_i
};

inline VoronoiCells voronoi_cells(const ParticleEnsemble& e) {
  const int n = e.size();
  VoronoiCells c;
  c.left.resize(n);
  c.right.resize(n);
  c.density.resize(n);
  for (int i = 0; i + 1 < n; ++i) {
    const double mid = 0.5 * (e.x[i] + e.x[i + 1]);
    c.right[i] = mid;
    c.left[i + 1] = mid;
  }
  if (e.domain.periodic()) {
    const double wrap_gap = e.x[0] + e.domain.length() - e.x[n - 1];
    c.right[n - 1] = e.x[n - 1] + 0.5 * wrap_gap;
    c.left[0] = e.x[0] - 0.5 * wrap_gap;
  } else {
    c.left[0] = e.x[0] - 0.5 * (e.x[1] - e.x[0]);
    c.right[n - 1] = e.x[n - 1] + 0.5 * (e.x[n - 1] - e.x[n - 2]);
  }
  for (int i = 0; i < n; ++i) c.density[i] = e.m[i] / (c.right[i] - c.left[i]);
  return c;
}

/// Deposits the Voronoi reconstruction onto grid cells by exact overlap.
inline std::vector<double> deposit_particles(const ParticleEnsemble& e, const Grid1D& grid) {
  const auto cells = voronoi_cells(e);
  const int n = grid.n_cells;
  std::vector<double> rho(n, 0.0);
  const double x0 = grid.domain.x_min;
  auto add = [&](double a, double b, double dens) {
    // [a, b] within one period image, a < b
    int ja = static_cast<int>(std::floor((a - x0) / grid.dx));
    int jb = static_cast<int>(std::floor((b - x0) / grid.dx));
    for (int j = ja; j <= jb; ++j) {
      const double lo = std::max(a, x0 + j * grid.dx);
      const double hi = std::min(b, x0 + (j + 1) * grid.dx);
      if (hi <= lo) continue;
      int jj = j;
      if (grid.periodic()) {
        jj = ((j % n) + n) % n;
      } else if (j < 0 || j >= n) {
        continue;
      }
      rho[jj] += dens * (hi - lo) / grid.dx;
    }
  };
  for (int i = 0; i < e.size(); ++i) add(cells.left[i], cells.right[i], cells.density[i]);
  return rho;
}

}  // namespace ealign
