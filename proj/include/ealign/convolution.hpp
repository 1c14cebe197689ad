#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "ealign/error.hpp"
#include "ealign/grid.hpp"
#include "ealign/kernels.hpp"

namespace ealign {

/// Primitives of psi0 as seen from a domain: on a window the odd extension
/// S(z) = sign(z) Psi0(|z|); on a torus the primitive of the minimum-image
/// kernel, S(z + L) = S(z) + |psi0|_1.  K is the even second primitive.
template <class Real = double>
class DomainPrimitive {
 public:
  DomainPrimitive(const KernelSpec& k, const Domain& d)
      : k_(k), periodic_(d.periodic()), len_(d.length()) {
    if (periodic_) half_mass_ = psi_primitive<Real>(k_, len_ / 2);
  }

  /// S(z).
  Real first(Real z) const {
    const Real a = z < 0 ? -z : z;
    Real v;
    if (!periodic_) {
      v = psi_primitive<Real>(k_, a);
    } else {
      using std::floor;
      const Real j = floor(a / len_);
      const Real w = a - j * len_;
      v = folded_first(w) + j * 2 * half_mass_;
    }
    return z < 0 ? -v : v;
  }

  /// K(z) for |z| <= L on a torus, any z on a window.
  Real second(Real z) const {
    const Real a = z < 0 ? -z : z;
    if (!periodic_ || a <= len_ / 2) return potential0<Real>(k_, a);
    return potential0<Real>(k_, len_ - a) + 2 * half_mass_ * (a - len_ / 2);
  }

  bool periodic() const { return periodic_; }
  Real length() const { return len_; }
  /// |psi0|_1 over one period (torus only).
  Real period_mass() const { return 2 * half_mass_; }

 private:
  Real folded_first(Real w) const {
    if (w <= len_ / 2) return psi_primitive<Real>(k_, w);
    return 2 * half_mass_ - psi_primitive<Real>(k_, len_ - w);
  }

  KernelSpec k_;
  bool periodic_;
  Real len_;
  Real half_mass_ = 0;
};

enum class Sampling {
  point,         ///< value at cell centers of psi0 * (piecewise-constant rho)
  cell_average,  ///< cell averages of the same function
};

enum class ConvolutionMethod { automatic, direct, fft };

struct ConvolutionOptions {
  ConvolutionMethod method = ConvolutionMethod::automatic;
  /// Test hook: flips the sign of every weight.
  bool inject_sign_error = false;
};

namespace detail {

inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

/// Circular convolution with a fixed real filter of length n via r2c/c2r.
class FftCircular {
 public:
  FftCircular(const std::vector<double>& filter) : n_(static_cast<int>(filter.size())) {
    const int nc = n_ / 2 + 1;
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n_));
    spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc));
    filter_hat_.resize(nc);
    {
      std::lock_guard<std::mutex> lock(fftw_plan_mutex());
      forward_ = fftw_plan_dft_r2c_1d(n_, real_, spec_, FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r_1d(n_, spec_, real_, FFTW_ESTIMATE);
    }
    if (!forward_ || !backward_) throw Error("fftw plan creation failed");
    std::copy(filter.begin(), filter.end(), real_);
    fftw_execute(forward_);
    for (int i = 0; i < nc; ++i) filter_hat_[i] = {spec_[i][0], spec_[i][1]};
  }
  FftCircular(const FftCircular&) = delete;
  FftCircular& operator=(const FftCircular&) = delete;
  ~FftCircular() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  int size() const { return n_; }

  /// in.size() <= n, zero padded; returns the first out_n outputs.
  void apply(std::span<const double> in, std::span<double> out) {
    std::fill(real_, real_ + n_, 0.0);
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(forward_);
    const int nc = n_ / 2 + 1;
    for (int i = 0; i < nc; ++i) {
      const std::complex<double> z = std::complex<double>(spec_[i][0], spec_[i][1]) * filter_hat_[i];
      spec_[i][0] = z.real();
      spec_[i][1] = z.imag();
    }
    fftw_execute(backward_);
    const double scale = 1.0 / n_;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = real_[i] * scale;
  }

 private:
  int n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  std::vector<std::complex<double>> filter_hat_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace detail

/// psi0 * rho on a grid for piecewise-constant rho, with weights built from
/// exact primitive differences in long double.  Output excludes the constant
/// offset; add offset * mass for the full psi * rho.
///
/// apply() reuses internal buffers: one instance per thread.
class GridConvolver {
 public:
  static constexpr int fft_threshold = 512;

  GridConvolver(const KernelSpec& k, const Grid1D& grid, Sampling sampling,
                ConvolutionOptions opts = {})
      : kernel_(k), grid_(grid), sampling_(sampling), opts_(opts) {
    build_weights();
    const bool use_fft = opts_.method == ConvolutionMethod::fft ||
                         (opts_.method == ConvolutionMethod::automatic &&
                          grid_.n_cells >= fft_threshold);
    if (use_fft) build_fft();
  }

  const Grid1D& grid() const { return grid_; }
  const KernelSpec& kernel() const { return kernel_; }
  Sampling sampling() const { return sampling_; }
  bool uses_fft() const { return static_cast<bool>(fft_); }

  /// Weight for cell offset k = i - j; |k| < n on a window, k mod n on a torus.
  double weight(int k) const {
    const int n = grid_.n_cells;
    if (grid_.periodic()) return weights_[((k % n) + n) % n];
    return weights_[k + n - 1];
  }

  /// Sum of all weights (equals |psi0|_1 over the reachable distances).
  double weight_sum() const {
    long double s = 0;
    for (double w : weights_) s += w;
    return static_cast<double>(s);
  }

  std::vector<double> apply(std::span<const double> rho) const {
    const int n = grid_.n_cells;
    if (static_cast<int>(rho.size()) != n) throw InputError("convolution: size mismatch");
    for (double r : rho) {
      if (!std::isfinite(r)) throw InputError("convolution: non-finite density entry");
    }
    std::vector<double> out(n, 0.0);
    if (fft_) {
      fft_->apply(rho, out);
      double scale = 0.0;
      for (double w : weights_) scale = std::max(scale, std::abs(w));
      double rmax = 0.0;
      for (double r : rho) rmax = std::max(rmax, std::abs(r));
      const double noise = 1e-12 * scale * rmax * n;
      for (double& v : out) {
        if (v < 0.0 && v > -noise) v = 0.0;
      }
    } else {
      direct(rho, out);
    }
    return out;
  }

  /// Direct O(n^2) evaluation regardless of the configured path.
  std::vector<double> apply_direct(std::span<const double> rho) const {
    std::vector<double> out(grid_.n_cells, 0.0);
    direct(rho, out);
    return out;
  }

 private:
  void direct(std::span<const double> rho, std::span<double> out) const {
    const int n = grid_.n_cells;
    for (int j = 0; j < n; ++j) {
      const double r = rho[j];
      if (r == 0.0) continue;
      for (int i = 0; i < n; ++i) out[i] += weight(i - j) * r;
    }
  }

  void build_weights() {
    using LD = long double;
    const int n = grid_.n_cells;
    const DomainPrimitive<LD> prim(kernel_, grid_.domain);
    const LD h = static_cast<LD>(grid_.domain.length()) / n;
    auto w = [&](int k) -> double {
      LD v;
      if (sampling_ == Sampling::point) {
        v = prim.first((k + LD(0.5)) * h) - prim.first((k - LD(0.5)) * h);
      } else {
        v = (prim.second((k + 1) * h) - 2 * prim.second(k * h) + prim.second((k - 1) * h)) / h;
      }
      if (v < 0) v = 0;
      return static_cast<double>(opts_.inject_sign_error ? -v : v);
    };
    if (grid_.periodic()) {
      weights_.resize(n);
      // offsets beyond n/2 are the same cells seen the short way round
      for (int k = 0; k < n; ++k) weights_[k] = w(k <= n / 2 ? k : k - n);
    } else {
      weights_.resize(2 * n - 1);
      for (int k = -(n - 1); k <= n - 1; ++k) weights_[k + n - 1] = w(k);
    }
  }

  void build_fft() {
    const int n = grid_.n_cells;
    if (grid_.periodic()) {
      fft_ = std::make_unique<detail::FftCircular>(weights_);
      return;
    }
    std::vector<double> filter(2 * n, 0.0);
    for (int k = 0; k < n; ++k) filter[k] = weight(k);
    for (int k = 1; k < n; ++k) filter[2 * n - k] = weight(-k);
    fft_ = std::make_unique<detail::FftCircular>(filter);
  }

  KernelSpec kernel_;
  Grid1D grid_;
  Sampling sampling_;
  ConvolutionOptions opts_;
  std::vector<double> weights_;
  std::shared_ptr<detail::FftCircular> fft_;
};

/// psi0 * rho evaluated at arbitrary points for piecewise-constant rho.
inline std::vector<double> convolve_at_points(const KernelSpec& k, const Grid1D& grid,
                                              std::span<const double> rho,
                                              std::span<const double> xs) {
  using LD = long double;
  const DomainPrimitive<LD> prim(k, grid.domain);
  const LD h = grid.dx;
  std::vector<double> out(xs.size(), 0.0);
  for (std::size_t p = 0; p < xs.size(); ++p) {
    LD acc = 0;
    for (int j = 0; j < grid.n_cells; ++j) {
      if (rho[j] == 0.0) continue;
      const LD z = grid.domain.displacement(grid.center(j), xs[p]);
      acc += rho[j] * (prim.first(z + h / 2) - prim.first(z - h / 2));
    }
    out[p] = static_cast<double>(acc);
  }
  return out;
}

struct NmpResult {
  double constant = 0.0;
  double bound = 0.0;
  double actual = 0.0;
  int argmax = -1;
  bool pass = true;
};

/// Nonlinear maximum principle check at x* = leftmost argmax of f:
/// 0 <= psi * f(x*) <= C f(x*)^s.  No tolerance is applied.
inline NmpResult nmp_bound(const KernelSpec& k, const Grid1D& grid, std::span<const double> f,
                           double mass, ConvolutionOptions opts = {}) {
  if (!(mass > 0.0)) throw InputError("nmp_bound: mass must be positive");
  NmpResult r;
  r.constant = nmp_constant(k, mass);
  int best = -1;
  double fmax = 0.0;
  for (int i = 0; i < static_cast<int>(f.size()); ++i) {
    if (f[i] < 0.0) throw InputError("nmp_bound: f must be non-negative");
    if (f[i] > fmax) {
      fmax = f[i];
      best = i;
    }
  }
  if (best < 0) return r;
  r.argmax = best;
  r.bound = r.constant * std::pow(fmax, k.s);
  opts.method = ConvolutionMethod::direct;
  const GridConvolver conv(k, grid, Sampling::point, opts);
  long double acc = 0;
  for (int j = 0; j < grid.n_cells; ++j) {
    if (f[j] != 0.0) acc += static_cast<long double>(conv.weight(best - j)) * f[j];
  }
  r.actual = static_cast<double>(acc + static_cast<long double>(k.offset) * mass);
  r.pass = r.actual >= 0.0 && r.actual <= r.bound;
  return r;
}

/// Exact face values of -K' * rho (K'' = psi, K' odd) for piecewise-constant
/// rho.  Window: n+1 faces.  Torus: n faces, with the mean slope removed so
/// the field is periodic; a constant offset has no periodic potential.
inline std::vector<double> aggregation_face_velocity(const KernelSpec& k, const Grid1D& grid,
                                                     std::span<const double> rho) {
  using LD = long double;
  const int n = grid.n_cells;
  const DomainPrimitive<LD> prim(k, grid.domain);
  const LD h = grid.dx;
  LD mass = 0, first = 0;
  for (int j = 0; j < n; ++j) {
    mass += rho[j] * h;
    first += rho[j] * h * static_cast<LD>(grid.center(j));
  }
  if (grid.periodic()) {
    if (k.offset != 0.0) {
      throw CompatibilityError("aggregation on a torus: constant kernel offset has no periodic potential",
                               k.offset * static_cast<double>(mass) * grid.domain.length());
    }
    const LD kappa = prim.period_mass() / prim.length();
    std::vector<LD> a(n);
    for (int d = 0; d < n; ++d) {
      const LD z = d * h;
      a[d] = prim.second(z) - prim.second(z - h) - kappa * (z * z - (z - h) * (z - h)) / 2;
    }
    std::vector<double> u(n);
    for (int f = 0; f < n; ++f) {
      LD acc = 0;
      for (int j = 0; j < n; ++j) {
        if (rho[j] != 0.0) acc += rho[j] * a[((f - j) % n + n) % n];
      }
      u[f] = static_cast<double>(-acc);
    }
    return u;
  }
  std::vector<LD> a(2 * n + 1);
  for (int d = -n; d <= n; ++d) a[d + n] = prim.second(d * h) - prim.second((d - 1) * h);
  std::vector<double> u(n + 1);
  for (int f = 0; f <= n; ++f) {
    LD acc = 0;
    for (int j = 0; j < n; ++j) {
      if (rho[j] != 0.0) acc += rho[j] * a[f - j + n];
    }
    const LD xf = grid.face(f);
    acc += static_cast<LD>(k.offset) * (mass * xf - first);
    u[f] = static_cast<double>(-acc);
  }
  return u;
}

}  // namespace ealign
