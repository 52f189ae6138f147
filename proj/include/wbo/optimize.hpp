#pragma once

// One-dimensional optimizers used by the exponent engines.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace wbo {

struct ConcaveMaximum {
  double argmax = 0.0;
  double value = 0.0;
  /// The bracket search hit the cap: the supremum is approached as
  /// lambda -> -infinity and `value` is only the value at the cap.
  bool capped = false;
};

inline constexpr double kBracketCap = 1e12;

/// Maximizes a concave, differentiable g over lambda <= 0 given g and g'.
///
/// If g'(0) >= 0 the maximizer is the boundary lambda = 0. Otherwise the
/// left end is doubled from -1 until g' turns positive and the root of g' is
/// located by bisection to a few ulps.
template <class F, class DF>
ConcaveMaximum maximize_concave_nonpositive(F&& g, DF&& dg, double cap = kBracketCap) {
  if (dg(0.0) >= 0.0) return {0.0, g(0.0), false};

  double hi = 0.0;
  double lo = -1.0;
  while (!(dg(lo) > 0.0)) {
    hi = lo;
    lo *= 2.0;
    if (-lo > cap) return {hi, g(hi), true};
  }

  constexpr double eps = std::numeric_limits<double>::epsilon();
  while (hi - lo > 4.0 * eps * std::max(1.0, std::abs(lo))) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (dg(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double at = lo + 0.5 * (hi - lo);
  return {at, g(at), false};
}

struct ScalarMinimum {
  double x;
  double value;
};

/// Golden-section minimization of a unimodal f on [a, b].
template <class F>
ScalarMinimum golden_section_minimize(F&& f, double a, double b, double tol = 1e-10) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? ScalarMinimum{x1, f1} : ScalarMinimum{x2, f2};
}

}  // namespace wbo
