#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "ealign/error.hpp"
#include "ealign/grid.hpp"

namespace ealign {

enum class KernelFamily { power_singular, power_with_tail, bounded_lipschitz, constant };

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::power_singular: return "power_singular";
    case KernelFamily::power_with_tail: return "power_with_tail";
    case KernelFamily::bounded_lipschitz: return "bounded_lipschitz";
    case KernelFamily::constant: return "constant";
  }
  return "?";
}

inline KernelFamily parse_kernel_family(std::string_view name) {
  for (auto f : {KernelFamily::power_singular, KernelFamily::power_with_tail,
                 KernelFamily::bounded_lipschitz, KernelFamily::constant}) {
    if (to_string(f) == name) return f;
  }
  throw InputError("unknown kernel family '" + std::string(name) +
                   "' (power_singular, power_with_tail, bounded_lipschitz, constant)");
}

/// Communication weight psi(r) = psi0(r) + offset, where psi0 is the
/// integrable part:
///   power_singular     psi0 = r^-s
///   power_with_tail    psi0 = r^-s on (0,1], r^-p beyond
///   bounded_lipschitz  psi0 = 1 / (1 + r^2)
///   constant           psi0 = 0 (the whole weight is the offset)
/// lower_bound / upper_bound are the declared constants with
/// lower r^-s <= psi <= upper r^-s on (0,1] for the singular families.
struct KernelSpec {
  KernelFamily family = KernelFamily::power_with_tail;
  double s = 0.5;
  double tail_exponent = 2.0;
  double lower_bound = 1.0;
  double upper_bound = 1.0;
  double offset = 0.0;

  static KernelSpec power(double s) {
    return {KernelFamily::power_singular, s, 2.0, 1.0, 1.0, 0.0};
  }
  static KernelSpec with_tail(double s, double p = 2.0) {
    return {KernelFamily::power_with_tail, s, p, 1.0, 1.0, 0.0};
  }
  static KernelSpec bounded() {
    return {KernelFamily::bounded_lipschitz, 0.0, 2.0, 1.0, 1.0, 0.0};
  }
  static KernelSpec constant(double c) {
    return {KernelFamily::constant, 0.0, 2.0, 1.0, 1.0, c};
  }

  bool singular() const {
    return family == KernelFamily::power_singular || family == KernelFamily::power_with_tail;
  }
};

/// Length scale beyond which the kernel is considered tail; window margins
/// are expressed in multiples of it.
inline double tail_length(const KernelSpec&) { return 1.0; }

/// Integrable part psi0(r), r > 0.
template <class Real = double>
Real psi0(const KernelSpec& k, Real r) {
  using std::pow;
  using std::sqrt;
  const Real s = k.s;
  const bool half = k.s == 0.5;
  switch (k.family) {
    case KernelFamily::power_singular: return half ? Real(1) / sqrt(r) : pow(r, -s);
    case KernelFamily::power_with_tail:
      if (r <= Real(1)) return half ? Real(1) / sqrt(r) : pow(r, -s);
      return k.tail_exponent == 2.0 ? Real(1) / (r * r) : pow(r, -Real(k.tail_exponent));
    case KernelFamily::bounded_lipschitz: return Real(1) / (Real(1) + r * r);
    case KernelFamily::constant: return Real(0);
  }
  return Real(0);
}

/// Psi0(r) = int_0^r psi0, r >= 0.
template <class Real = double>
Real psi_primitive(const KernelSpec& k, Real r) {
  using std::atan;
  using std::pow;
  using std::sqrt;
  if (r <= Real(0)) return Real(0);
  const Real s = k.s;
  auto head = [&](Real x) { return k.s == 0.5 ? 2 * sqrt(x) : pow(x, Real(1) - s) / (Real(1) - s); };
  switch (k.family) {
    case KernelFamily::power_singular: return head(r);
    case KernelFamily::power_with_tail: {
      if (r <= Real(1)) return head(r);
      const Real p = k.tail_exponent;
      if (k.tail_exponent == 2.0) return Real(1) / (Real(1) - s) + (Real(1) - Real(1) / r);
      return Real(1) / (Real(1) - s) + (Real(1) - pow(r, Real(1) - p)) / (p - Real(1));
    }
    case KernelFamily::bounded_lipschitz: return atan(r);
    case KernelFamily::constant: return Real(0);
  }
  return Real(0);
}

/// M1(r) = int_0^r y psi0(y) dy, r >= 0.
template <class Real = double>
Real psi_first_moment(const KernelSpec& k, Real r) {
  using std::log;
  using std::log1p;
  using std::pow;
  if (r <= Real(0)) return Real(0);
  const Real s = k.s;
  switch (k.family) {
    case KernelFamily::power_singular: return pow(r, Real(2) - s) / (Real(2) - s);
    case KernelFamily::power_with_tail: {
      if (r <= Real(1)) return pow(r, Real(2) - s) / (Real(2) - s);
      const Real p = k.tail_exponent;
      const Real tail = (p == Real(2)) ? log(r) : (pow(r, Real(2) - p) - Real(1)) / (Real(2) - p);
      return Real(1) / (Real(2) - s) + tail;
    }
    case KernelFamily::bounded_lipschitz: return log1p(r * r) / Real(2);
    case KernelFamily::constant: return Real(0);
  }
  return Real(0);
}

/// K0(r) = int_0^r Psi0 = r Psi0(r) - M1(r); the even potential with
/// K0'' = psi0 and K0'(0) = 0.
template <class Real = double>
Real potential0(const KernelSpec& k, Real r) {
  using std::pow;
  if (r <= Real(0)) return Real(0);
  if (k.family == KernelFamily::power_singular ||
      (k.family == KernelFamily::power_with_tail && r <= Real(1))) {
    const Real s = k.s;
    return pow(r, Real(2) - s) / ((Real(1) - s) * (Real(2) - s));
  }
  return r * psi_primitive<Real>(k, r) - psi_first_moment<Real>(k, r);
}

/// Closed-form moments of psi0 over [r1, r2], 0 <= r1 <= r2.
struct KernelMoments {
  double mass = 0.0;   ///< int psi0
  double first = 0.0;  ///< int r psi0
};

inline KernelMoments kernel_moments(const KernelSpec& k, double r1, double r2) {
  if (r1 < 0.0 || r2 < r1) throw DomainError("kernel_moments needs 0 <= r1 <= r2");
  return {psi_primitive(k, r2) - psi_primitive(k, r1),
          psi_first_moment(k, r2) - psi_first_moment(k, r1)};
}

/// Full weight psi(r) including the constant offset.  Point evaluation at
/// r <= 0 is refused: the singularity is integrable but not evaluable.
inline double eval_psi(const KernelSpec& k, double r) {
  if (!(r > 0.0)) {
    throw DomainError("eval_psi: r must be positive (got " + std::to_string(r) +
                      "); integrate cell moments instead");
  }
  return psi0(k, r) + k.offset;
}

/// L1 norm of psi0 over the distances that occur on the domain: the periodic
/// cell [-L/2, L/2] on a torus, [-W, W] on a window of width W.
inline double kernel_l1(const KernelSpec& k, const Domain& d) {
  const double reach = d.periodic() ? 0.5 * d.length() : d.length();
  return 2.0 * psi_primitive(k, reach);
}

/// L1 norm of psi0 on the whole line (infinite for the pure power).
inline double kernel_l1_line(const KernelSpec& k) {
  switch (k.family) {
    case KernelFamily::power_singular: return std::numeric_limits<double>::infinity();
    case KernelFamily::power_with_tail:
      return 2.0 * (1.0 / (1.0 - k.s) + 1.0 / (k.tail_exponent - 1.0));
    case KernelFamily::bounded_lipschitz: return std::acos(-1.0);
    case KernelFamily::constant: return 0.0;
  }
  return 0.0;
}

enum class OsgoodStatus { holds, violated };

inline std::string_view to_string(OsgoodStatus o) {
  return o == OsgoodStatus::holds ? "holds" : "violated";
}

/// Classifies int_0^1 dr / K'(r) by the behaviour of K' at the origin:
/// K'(r) ~ r for bounded weights (integral diverges, global regularity),
/// K'(r) ~ r^(1-s) for weakly singular ones (finite, concentration).
inline OsgoodStatus osgood_check(const KernelSpec& k) {
  return k.singular() ? OsgoodStatus::violated : OsgoodStatus::holds;
}

/// K'(z) with K'' = psi, K' odd, K'(0) = 0.
inline double potential_derivative(const KernelSpec& k, double z) {
  const double a = std::abs(z);
  const double v = psi_primitive(k, a) + k.offset * a;
  return z < 0 ? -v : v;
}

/// Constant in the nonlinear maximum principle:
/// psi * f(x*) <= C f(x*)^s with C = Lambda (2-s)/(1-s) 2^s |f|_1^(1-s).
inline double nmp_constant(const KernelSpec& k, double mass) {
  const double s = k.s;
  return k.upper_bound * ((2.0 - s) / (1.0 - s)) * std::pow(2.0, s) * std::pow(mass, 1.0 - s);
}

/// Throws InputError naming the violated rule.  Sampling checks of the
/// declared bounds and monotonicity run on (0,1] and into the tail.
inline void validate(const KernelSpec& k) {
  auto fail = [](const std::string& msg) { throw InputError("kernel: " + msg); };
  if (!(k.offset >= 0.0) || !std::isfinite(k.offset)) fail("offset c must be finite and >= 0");
  if (k.singular()) {
    if (!(k.s > 0.0 && k.s < 1.0)) {
      fail("s = " + std::to_string(k.s) +
           " outside the weakly singular range s in (0,1)");
    }
    if (!(k.lower_bound > 0.0) || !(k.upper_bound >= k.lower_bound)) {
      fail("declared bounds need 0 < lambda <= Lambda");
    }
  }
  if (k.family == KernelFamily::power_with_tail && !(k.tail_exponent > 1.0)) {
    fail("tail exponent p = " + std::to_string(k.tail_exponent) + " must exceed 1");
  }
  if (k.family == KernelFamily::constant && !(k.offset > 0.0)) {
    fail("constant family needs a positive offset c");
  }
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 256; ++i) {
    const double r = i / 64.0;
    const double v = eval_psi(k, r);
    if (!(v > 0.0)) fail("psi must be positive");
    if (v > prev * (1.0 + 1e-14)) fail("psi must be non-increasing");
    prev = v;
    if (k.singular() && r <= 1.0) {
      const double ref = std::pow(r, -k.s);
      const double tol = 1e-12 * ref;
      if (v - k.offset < k.lower_bound * ref - tol || v - k.offset > k.upper_bound * ref + tol) {
        fail("declared bounds lambda r^-s <= psi <= Lambda r^-s fail at r = " +
             std::to_string(r));
      }
    }
  }
}

}  // namespace ealign
