#pragma once

// Matérn correlation, its spectral density, correlation matrices over designs,
// the Wendland-1 taper and the effective-range conversion.
//
// Everything here is a pure function of its arguments.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "gpgeo/errors.hpp"
#include "gpgeo/types.hpp"

namespace gpgeo {

/// Scaled lag h/rho beyond which the correlation is reported as exactly 0.
/// exp(-705) is the last power of e well inside the double range.
inline constexpr double kUnderflowLag = 705.0;

/// Correlation level defining the effective range.
inline constexpr double kEffectiveRangeLevel = 0.05;

namespace detail {

template <typename Scalar>
void require_positive(Scalar value, const char* what) {
  if (!(value > 0) || std::isnan(value)) {
    throw DomainError(std::string(what) + " must be positive");
  }
}

template <typename Scalar>
void check_matern_args(Scalar h, Scalar rho, Scalar nu) {
  if (!(h >= 0)) throw DomainError("matern_correlation: lag must be nonnegative");
  require_positive(rho, "matern_correlation: rho");
  require_positive(nu, "matern_correlation: nu");
}

}  // namespace detail

/// Matérn correlation through the modified Bessel function for any nu > 0:
///   x^nu K_nu(x) / (Gamma(nu) 2^(nu-1)),  x = h / rho.
/// Used for non half-integer nu and as the reference path in tests.
template <typename Scalar>
Scalar matern_correlation_bessel(Scalar h, Scalar rho, Scalar nu) {
  detail::check_matern_args(h, rho, nu);
  const Scalar x = h / rho;
  if (x == 0) return Scalar(1);
  if (x > Scalar(kUnderflowLag)) return Scalar(0);

  Scalar bessel;
  try {
    bessel = std::cyl_bessel_k(nu, x);
  } catch (const std::exception& e) {
    throw NumericalError(std::string("matern_correlation: Bessel K evaluation failed: ") +
                         e.what());
  }
  const Scalar log_scale = nu * std::log(x) - std::lgamma(nu) - (nu - 1) * std::numbers::ln2_v<Scalar>;
  const Scalar value = std::exp(log_scale) * bessel;
  if (!std::isfinite(value)) {
    throw NumericalError("matern_correlation: non-finite Bessel product at h/rho = " +
                         std::to_string(static_cast<double>(x)));
  }
  // Rounding in the product can push values at tiny lags a hair above 1.
  return std::min(value, Scalar(1));
}

/// Matérn correlation K(h; rho, nu) = cov / sigma^2. Closed forms for
/// nu in {0.5, 1.5, 2.5}, Bessel evaluation otherwise.
template <typename Scalar>
Scalar matern_correlation(Scalar h, Scalar rho, Scalar nu) {
  detail::check_matern_args(h, rho, nu);
  const Scalar x = h / rho;
  if (x == 0) return Scalar(1);
  if (x > Scalar(kUnderflowLag)) return Scalar(0);
  if (nu == Scalar(0.5)) return std::exp(-x);
  if (nu == Scalar(1.5)) return (1 + x) * std::exp(-x);
  if (nu == Scalar(2.5)) return (1 + x + x * x / 3) * std::exp(-x);
  return matern_correlation_bessel(h, rho, nu);
}

/// Spectral density of the Matérn correlation in d dimensions:
///   Gamma(nu + d/2) / (pi^(d/2) Gamma(nu)) rho^(-2 nu) (rho^-2 + |w|^2)^-(nu + d/2).
template <typename Scalar>
Scalar matern_spectral_density(Scalar omega_norm, Scalar rho, Scalar nu, int d) {
  if (!(omega_norm >= 0)) throw DomainError("matern_spectral_density: |omega| must be nonnegative");
  detail::require_positive(rho, "matern_spectral_density: rho");
  detail::require_positive(nu, "matern_spectral_density: nu");
  if (d < 1 || d > 3) throw DomainError("matern_spectral_density: d must be 1, 2 or 3");
  const Scalar half_d = Scalar(d) / 2;
  const Scalar log_norm = std::lgamma(nu + half_d) - half_d * std::log(std::numbers::pi_v<Scalar>) -
                          std::lgamma(nu);
  const Scalar log_tail =
      -2 * nu * std::log(rho) - (nu + half_d) * std::log(1 / (rho * rho) + omega_norm * omega_norm);
  return std::exp(log_norm + log_tail);
}

/// Wendland-1 taper (1 - t)_+^4 (4t + 1), t = h / taper_range. Positive definite in d <= 3.
/// An infinite taper_range gives exactly 1 everywhere.
template <typename Scalar>
Scalar taper_correlation(Scalar h, Scalar taper_range) {
  if (!(h >= 0)) throw DomainError("taper_correlation: lag must be nonnegative");
  detail::require_positive(taper_range, "taper_correlation: taper_range");
  if (h >= taper_range) return Scalar(0);
  const Scalar t = h / taper_range;
  const Scalar u = 1 - t;
  return (u * u) * (u * u) * (4 * t + 1);
}

/// Symmetric matrix of pairwise distances.
template <typename Scalar>
Matrix<Scalar> pairwise_distances(const Design<Scalar>& design) {
  const Index n = design.size();
  Matrix<Scalar> dist(n, n);
  for (Index j = 0; j < n; ++j) {
    dist(j, j) = 0;
    for (Index i = j + 1; i < n; ++i) dist(i, j) = dist(j, i) = design.distance(i, j);
  }
  return dist;
}

/// Correlation matrix from a precomputed distance matrix, optionally Schur-multiplied
/// by the taper at `taper_range`.
template <typename Scalar>
Matrix<Scalar> correlation_from_distances(const Matrix<Scalar>& dist, Scalar rho, Scalar nu,
                                          std::optional<Scalar> taper_range = std::nullopt) {
  const Index n = dist.rows();
  Matrix<Scalar> corr(n, n);
  for (Index j = 0; j < n; ++j) {
    corr(j, j) = matern_correlation(Scalar(0), rho, nu);
    if (taper_range) corr(j, j) *= taper_correlation(Scalar(0), *taper_range);
    for (Index i = j + 1; i < n; ++i) {
      Scalar value = matern_correlation(dist(i, j), rho, nu);
      if (taper_range) value *= taper_correlation(dist(i, j), *taper_range);
      corr(i, j) = corr(j, i) = value;
    }
  }
  return corr;
}

/// Gamma_n(rho): entry (i, j) = K(|s_i - s_j|; rho, nu).
template <typename Scalar>
Matrix<Scalar> correlation_matrix(const Design<Scalar>& design, Scalar rho, Scalar nu) {
  return correlation_from_distances(pairwise_distances(design), rho, nu);
}

/// Gamma_n(rho) o T, the Schur product with the taper matrix.
template <typename Scalar>
Matrix<Scalar> tapered_correlation_matrix(const Design<Scalar>& design, Scalar rho, Scalar nu,
                                          Scalar taper_range) {
  return correlation_from_distances(pairwise_distances(design), rho, nu,
                                    std::optional<Scalar>(taper_range));
}

/// gamma_n(rho): correlations between s0 and every design location.
template <typename Scalar>
Vector<Scalar> cross_correlation(const Location<Scalar>& s0, const Design<Scalar>& design,
                                 Scalar rho, Scalar nu) {
  design.require_dim(s0);
  Vector<Scalar> out(design.size());
  for (Index i = 0; i < design.size(); ++i) {
    out(i) = matern_correlation(euclidean_distance(design.coords().row(i), s0.transpose()), rho, nu);
  }
  return out;
}

/// n x m matrix whose column j is cross_correlation(targets[j], design, ...).
template <typename Scalar>
Matrix<Scalar> cross_correlation(const Design<Scalar>& targets, const Design<Scalar>& design,
                                 Scalar rho, Scalar nu) {
  if (targets.dim() != design.dim()) {
    throw DimensionMismatch("cross_correlation: targets and design differ in dimension");
  }
  Matrix<Scalar> out(design.size(), targets.size());
  for (Index j = 0; j < targets.size(); ++j) {
    for (Index i = 0; i < design.size(); ++i) {
      out(i, j) = matern_correlation(
          euclidean_distance(design.coords().row(i), targets.coords().row(j)), rho, nu);
    }
  }
  return out;
}

/// The range rho at which K(effective_range; rho, nu) == level, by bisection to
/// relative tolerance 1e-10. K is strictly increasing in rho, so the root is unique.
template <typename Scalar>
Scalar effective_range_to_rho(Scalar effective_range, Scalar nu,
                              Scalar level = Scalar(kEffectiveRangeLevel)) {
  detail::require_positive(effective_range, "effective_range_to_rho: effective range");
  detail::require_positive(nu, "effective_range_to_rho: nu");
  if (!(level > 0 && level < 1)) throw DomainError("effective_range_to_rho: level must be in (0, 1)");

  auto excess = [&](Scalar rho) { return matern_correlation(effective_range, rho, nu) - level; };
  Scalar lo = effective_range;
  Scalar hi = effective_range;
  constexpr int kMaxExpansions = 2000;
  int steps = 0;
  while (excess(lo) > 0) {
    lo /= 2;
    if (++steps > kMaxExpansions || !(lo > 0)) {
      throw ConvergenceError("effective_range_to_rho: failed to bracket from below");
    }
  }
  steps = 0;
  while (excess(hi) < 0) {
    hi *= 2;
    if (++steps > kMaxExpansions || !std::isfinite(hi)) {
      throw ConvergenceError("effective_range_to_rho: failed to bracket from above");
    }
  }
  // Finer than the 1e-10 contract, floored at a few ulps for narrow scalar types.
  const Scalar rel_tol = std::max(Scalar(1e-12), 4 * std::numeric_limits<Scalar>::epsilon());
  for (int iter = 0; iter < 500; ++iter) {
    const Scalar mid = lo + (hi - lo) / 2;
    if (excess(mid) > 0) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi - lo <= rel_tol * hi) return lo + (hi - lo) / 2;
  }
  throw ConvergenceError("effective_range_to_rho: bisection did not converge");
}

}  // namespace gpgeo
