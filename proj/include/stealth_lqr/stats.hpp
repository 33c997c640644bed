#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "stealth_lqr/errors.hpp"

namespace stealth_lqr::stats {

/// Upper tail of the standard normal, Q(x) = P(X > x).
inline double normal_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Inverse of the standard normal CDF. Acklam's rational approximation
/// (relative error ~1e-9) followed by one Halley step against erfc.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

/// Q^{-1}(p): the point whose upper standard-normal tail is p.
inline double normal_tail_inverse(double p) { return -normal_quantile(p); }

/// Score (Wilson) interval for a binomial proportion at confidence 1 - c.
inline std::pair<double, double> score_ci(double p_hat, long long n, double c = 0.05) {
  if (n < 1) throw ValidationError("score_ci: n must be positive");
  if (!(c > 0.0 && c < 1.0)) throw ValidationError("score_ci: c must lie in (0, 1)");
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw ValidationError("score_ci: p_hat must lie in [0, 1]");
  const double nn = static_cast<double>(n);
  const double z = normal_tail_inverse(c / 2.0);
  const double gamma = z * z / nn;
  const double theta = z * std::sqrt((p_hat * (1.0 - p_hat) + z * z / (4.0 * nn)) / nn);
  double lo = (p_hat + 0.5 * gamma - theta) / (1.0 + gamma);
  double hi = (p_hat + 0.5 * gamma + theta) / (1.0 + gamma);
  lo = std::clamp(std::min(lo, p_hat), 0.0, 1.0);
  hi = std::clamp(std::max(hi, p_hat), 0.0, 1.0);
  return {lo, hi};
}

}  // namespace stealth_lqr::stats
