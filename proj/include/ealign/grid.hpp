#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "ealign/error.hpp"

namespace ealign {

enum class DomainKind { torus, window };

inline std::string_view to_string(DomainKind kind) {
  return kind == DomainKind::torus ? "torus" : "window";
}

inline DomainKind parse_domain_kind(std::string_view name) {
  if (name == "torus") return DomainKind::torus;
  if (name == "window") return DomainKind::window;
  throw InputError("unknown domain '" + std::string(name) + "' (expected torus or window)");
}

/// Spatial domain: a periodic cell [x_min, x_min + L) or a finite window of
/// the real line standing in for R.
struct Domain {
  DomainKind kind = DomainKind::window;
  double x_min = 0.0;
  double x_max = 1.0;

  static Domain torus(double length, double x_min = 0.0) {
    return {DomainKind::torus, x_min, x_min + length};
  }
  static Domain window(double x_min, double x_max) {
    return {DomainKind::window, x_min, x_max};
  }

  bool periodic() const { return kind == DomainKind::torus; }
  double length() const { return x_max - x_min; }

  /// Signed displacement from `from` to `to`; minimum image on a torus.
  double displacement(double from, double to) const {
    double d = to - from;
    if (periodic()) {
      const double len = length();
      d -= len * std::round(d / len);
    }
    return d;
  }

  /// Maps x into the fundamental cell of a torus; identity on a window.
  double wrap(double x) const {
    if (!periodic()) return x;
    const double len = length();
    double y = std::fmod(x - x_min, len);
    if (y < 0) y += len;
    return x_min + y;
  }
};

/// Uniform cell grid on a Domain. Cell i spans
/// [x_min + i dx, x_min + (i+1) dx].
struct Grid1D {
  static constexpr int min_cells = 16;

  Domain domain;
  int n_cells = 0;
  double dx = 0.0;

  Grid1D() = default;
  Grid1D(Domain d, int n) : domain(d), n_cells(n), dx(d.length() / n) {
    if (n < min_cells) {
      throw InputError("grid needs at least " + std::to_string(min_cells) +
                       " cells, got " + std::to_string(n));
    }
    if (!(d.length() > 0.0) || !std::isfinite(d.length())) {
      throw InputError("grid domain must have positive finite length");
    }
  }

  double center(int i) const { return domain.x_min + (i + 0.5) * dx; }
  double face(int i) const { return domain.x_min + i * dx; }
  bool periodic() const { return domain.periodic(); }

  /// Index of the cell containing x (wrapped on a torus, clamped on a window).
  int cell_of(double x) const {
    const double y = (domain.wrap(x) - domain.x_min) / dx;
    int i = static_cast<int>(std::floor(y));
    if (i < 0) i = periodic() ? i + n_cells : 0;
    if (i >= n_cells) i = periodic() ? i - n_cells : n_cells - 1;
    return i;
  }
};

}  // namespace ealign
