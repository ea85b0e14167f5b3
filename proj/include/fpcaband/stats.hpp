#pragma once

// Scalar distribution utilities: standard normal quantile and chi-squared
// quantile. Implemented locally (rational approximation refined by Halley
// steps, and regularized incomplete gamma with a Newton inversion) so the
// numeric core depends on Eigen alone.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fpcaband::stats {

namespace detail {

// Acklam-style rational approximation to Phi^{-1}, then one Halley
// refinement against std::erfc. Absolute error well below 1e-14 on (0,1).
inline double normal_quantile_approx(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q = 0.0;
  double r = 0.0;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - plow) {
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
            a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r +
            1.0);
  }
  q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
           c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

// Regularized lower incomplete gamma P(a, x), series / continued fraction.
inline double regularized_gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) {
    throw std::invalid_argument("regularized_gamma_p: bad arguments");
  }
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // series expansion
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int k = 0; k < 500; ++k) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Lentz continued fraction for Q(a, x)
  const double tiny = 1e-300;
  double bb = x + 1.0 - a;
  double cc = 1.0 / tiny;
  double dd = 1.0 / bb;
  double h = dd;
  for (int k = 1; k <= 500; ++k) {
    const double an = -static_cast<double>(k) * (static_cast<double>(k) - a);
    bb += 2.0;
    dd = an * dd + bb;
    if (std::fabs(dd) < tiny) dd = tiny;
    cc = bb + an / cc;
    if (std::fabs(cc) < tiny) cc = tiny;
    dd = 1.0 / dd;
    const double delta = dd * cc;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

}  // namespace detail

// Quantile of the standard normal distribution.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
  }
  double x = detail::normal_quantile_approx(p);
  // Halley refinement
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Quantile of the chi-squared distribution with dof degrees of freedom:
// the x with P(dof/2, x/2) = p. Wilson-Hilferty start, Newton iteration,
// bisection safeguard.
inline double chi_squared_quantile(double dof, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("chi_squared_quantile: p must lie in (0,1)");
  }
  if (!(dof > 0.0)) {
    throw std::invalid_argument("chi_squared_quantile: dof must be positive");
  }
  const double a = 0.5 * dof;
  const double z = normal_quantile(p);
  // Wilson-Hilferty approximation
  const double t = 1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof));
  double x = dof * t * t * t;
  if (!(x > 0.0)) x = 0.5 * dof;

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  const double lg = std::lgamma(a);
  for (int it = 0; it < 200; ++it) {
    const double f = detail::regularized_gamma_p(a, 0.5 * x) - p;
    if (f > 0.0) {
      hi = std::min(hi, x);
    } else {
      lo = std::max(lo, x);
    }
    // chi-squared density at x
    const double logpdf =
        (a - 1.0) * std::log(0.5 * x) - 0.5 * x - lg - std::log(2.0);
    const double pdf = std::exp(logpdf);
    double step = (pdf > 0.0) ? f / pdf : 0.0;
    double next = x - step;
    if (!(next > lo && (next < hi || !std::isfinite(hi)))) {
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * x;
    }
    if (std::fabs(next - x) <= 1e-14 * std::max(1.0, x)) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

}  // namespace fpcaband::stats
