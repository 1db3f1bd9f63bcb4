#pragma once

// Scalar special functions and root finding shared by the allocators.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "mimoalloc/errors.hpp"

namespace mimoalloc::numerics {

/// Stopping rule for bracketing solvers.
///
/// `abs_tol` bounds the residual |f(x)|; `rel_tol` bounds the bracket width
/// relative to max(1, |x|). Either condition ends the search.
struct Tolerance {
  double abs_tol = 1e-10;
  double rel_tol = 1e-15;
  int max_iter = 200;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_iter < 1) {
      throw DomainError("tolerance requires abs_tol > 0, rel_tol > 0, max_iter >= 1");
    }
  }
};

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
inline double q_function(double x) {
  if (!std::isfinite(x)) throw DomainError("q_function: non-finite argument");
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

namespace detail {

inline double lambert_w0_halley(double x) {
  // log1p(x) >= W(x) on [0, e] and is within a factor ~1.4 of it.
  double w = std::log1p(x);
  for (int i = 0; i < 64; ++i) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= dw;
    if (std::abs(dw) <= 1e-16 * std::abs(w)) break;
  }
  return w;
}

}  // namespace detail

/// Principal branch W(e^log_x), evaluated without forming e^log_x when it
/// would overflow. Accepts log_x = -inf (returns 0).
inline double lambert_w0_of_log(double log_x) {
  if (std::isnan(log_x) || log_x == std::numeric_limits<double>::infinity()) {
    throw DomainError("lambert_w0_of_log: argument must be finite or -inf");
  }
  if (log_x <= 1.0) {
    const double x = std::exp(log_x);
    if (x < 1e-300) return x;
    return detail::lambert_w0_halley(x);
  }
  // w + ln(w) = log_x; Newton from the two-term asymptotic guess.
  double w = log_x - std::log(log_x);
  for (int i = 0; i < 64; ++i) {
    const double g = w + std::log(w) - log_x;
    const double dw = g / (1.0 + 1.0 / w);
    w -= dw;
    if (std::abs(dw) <= 4e-16 * w) break;
  }
  return w;
}

/// Principal branch of the Lambert W function on x >= 0.
inline double lambert_w0(double x) {
  if (!std::isfinite(x)) throw DomainError("lambert_w0: non-finite argument");
  if (x < 0.0) throw DomainError("lambert_w0: negative argument (only the principal branch on x >= 0 is provided)");
  if (x == 0.0) return 0.0;
  if (x <= std::numbers::e) return detail::lambert_w0_halley(x);
  return lambert_w0_of_log(std::log(x));
}

/// CDF of the quarter-circle law, the limiting singular-value distribution of
/// an n x n matrix with i.i.d. entries of variance 1/n. Support [0, 2].
inline double quarter_circle_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return (x * std::sqrt(4.0 - x * x) + 4.0 * std::asin(x / 2.0)) / (2.0 * std::numbers::pi);
}

inline double quarter_circle_density(double x) {
  if (x < 0.0 || x > 2.0) return 0.0;
  return std::sqrt(4.0 - x * x) / std::numbers::pi;
}

/// Inverse of quarter_circle_cdf on (0, 1).
inline double quarter_circle_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quarter_circle_quantile: u must lie in (0, 1)");
  double lo = 0.0;
  double hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (quarter_circle_cdf(mid) < u ? lo : hi) = mid;
  }
  return std::abs(quarter_circle_cdf(lo) - u) <= std::abs(quarter_circle_cdf(hi) - u) ? lo : hi;
}

/// Root of a monotone function on [lo, hi] by bisection.
template <class F>
double bisect(F&& f, double lo, double hi, const Tolerance& tol) {
  tol.validate();
  if (!(lo < hi)) throw DomainError("bisect: requires lo < hi");
  double flo = f(lo);
  double fhi = f(hi);
  if (std::isnan(flo) || std::isnan(fhi)) throw DomainError("bisect: function is NaN at a bracket end");
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (std::signbit(flo) == std::signbit(fhi)) {
    std::ostringstream msg;
    msg << "bisect: no sign change on [" << lo << ", " << hi << "] (f = " << flo << ", " << fhi << ")";
    throw BracketingError(msg.str());
  }
  for (int iter = 0; iter < tol.max_iter; ++iter) {
    const double mid = lo + 0.5 * (hi - lo);
    const double fm = f(mid);
    if (std::isnan(fm)) throw DomainError("bisect: function is NaN inside the bracket");
    if (std::abs(fm) <= tol.abs_tol) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
    const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
    const double next = lo + 0.5 * (hi - lo);
    if (hi - lo <= tol.rel_tol * scale || next <= lo || next >= hi) {
      return std::abs(flo) <= std::abs(fhi) ? lo : hi;
    }
  }
  std::ostringstream msg;
  msg << "bisect: no convergence after " << tol.max_iter << " iterations, bracket [" << lo << ", " << hi << "]";
  throw ConvergenceError(msg.str());
}

}  // namespace mimoalloc::numerics
