#pragma once

#include <cmath>
#include <numbers>

#include "gpgeo/errors.hpp"

namespace gpgeo {

/// Standard normal quantile. Acklam's rational approximation (relative error
/// ~1.2e-9) followed by one Halley step against erfc, which brings it to near
/// full double precision.
template <typename Scalar = double>
Scalar normal_quantile(Scalar p) {
  if (!(p > 0 && p < 1)) throw DomainError("normal_quantile: p must lie in (0, 1)");

  constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                          1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                          6.680131188771972e+01,  -1.328068155288572e+01};
  constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                          -2.549671010229708e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                          3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  const double pd = static_cast<double>(p);
  double x;
  if (pd < p_low) {
    const double q = std::sqrt(-2 * std::log(pd));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (pd <= 1 - p_low) {
    const double q = pd - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-pd));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }

  // Halley refinement.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - pd;
  const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
  x = x - u / (1 + x * u / 2);
  return static_cast<Scalar>(x);
}

/// Two-sided multiplier z_{(1+level)/2}.
template <typename Scalar = double>
Scalar normal_two_sided_multiplier(Scalar level) {
  if (!(level > 0 && level < 1)) throw DomainError("level must lie in (0, 1)");
  return normal_quantile<Scalar>((1 + level) / 2);
}

}  // namespace gpgeo
