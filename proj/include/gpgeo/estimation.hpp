#pragma once

// Gaussian log-likelihood of a mean-zero Matérn field, the profile likelihood in
// rho with sigma^2 maximized in closed form, and the estimators of the
// microergodic parameter c = sigma^2 / rho^(2 nu) built on it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <utility>

#include "gpgeo/covariance.hpp"
#include "gpgeo/errors.hpp"
#include "gpgeo/optimize.hpp"
#include "gpgeo/types.hpp"

namespace gpgeo {

/// Normal quantile used for confidence intervals on c (rounded, as customary).
inline constexpr double kCiMultiplier = 1.96;

enum class FitMode { mle, fixed_rho, tapered_mle };

enum class BoundaryHit { none, lower, upper };

inline const char* to_string(FitMode mode) {
  switch (mode) {
    case FitMode::mle: return "mle";
    case FitMode::fixed_rho: return "fixed_rho";
    case FitMode::tapered_mle: return "tapered_mle";
  }
  return "unknown";
}

inline const char* to_string(BoundaryHit hit) {
  switch (hit) {
    case BoundaryHit::none: return "none";
    case BoundaryHit::lower: return "lower";
    case BoundaryHit::upper: return "upper";
  }
  return "unknown";
}

/// Search settings for the range. nu is known and held fixed.
template <typename Scalar>
struct FitConfig {
  Scalar nu = Scalar(0.5);
  Scalar rho_lower = Scalar(1e-4);
  Scalar rho_upper = Scalar(1e4);
  int grid_points = 50;
  Scalar tolerance = Scalar(1e-8);

  void validate() const {
    if (!(nu > 0) || !std::isfinite(nu)) throw DomainError("FitConfig: nu must be positive");
    if (!(rho_lower > 0) || !(rho_lower < rho_upper) || !std::isfinite(rho_upper)) {
      throw DomainError("FitConfig: need 0 < rho_lower < rho_upper < inf");
    }
    if (grid_points < 2) throw DomainError("FitConfig: grid_points must be at least 2");
    if (!(tolerance > 0)) throw DomainError("FitConfig: tolerance must be positive");
  }
};

template <typename Scalar>
struct FitResult {
  Scalar rho_hat = 0;
  Scalar sigma2_hat = 0;
  Scalar c_hat = 0;
  Scalar loglik = 0;
  Scalar ci_lower = 0;
  Scalar ci_upper = 0;
  Index n = 0;
  FitMode mode = FitMode::mle;
  BoundaryHit boundary = BoundaryHit::none;
  int evaluations = 0;
  int failed_evaluations = 0;
};

/// c = sigma^2 / rho^(2 nu).
template <typename Scalar>
Scalar microergodic(Scalar sigma2, Scalar rho, Scalar nu) {
  if (!(sigma2 > 0) || !(rho > 0) || !(nu > 0)) {
    throw DomainError("microergodic: sigma2, rho and nu must be positive");
  }
  return sigma2 / std::pow(rho, 2 * nu);
}

/// c_hat +/- 1.96 (2 c_hat^2 / n)^(1/2). Not truncated at zero.
template <typename Scalar>
std::pair<Scalar, Scalar> microergodic_interval(Scalar c_hat, Index n) {
  if (n < 1) throw DomainError("microergodic_interval: n must be positive");
  const Scalar half = Scalar(kCiMultiplier) * std::sqrt(2 * c_hat * c_hat / Scalar(n));
  return {c_hat - half, c_hat + half};
}

namespace detail {

template <typename Scalar>
void check_observations(const Vector<Scalar>& z, const Design<Scalar>& design) {
  if (z.size() != design.size()) {
    throw DimensionMismatch("observations have length " + std::to_string(z.size()) +
                            " but the design has " + std::to_string(design.size()) + " locations");
  }
  if (!z.allFinite()) throw DomainError("observations must be finite");
}

}  // namespace detail

/// z' C^-1 z and log|C| from one Cholesky factorization of C.
template <typename Scalar>
struct QuadraticForm {
  Scalar quad;
  Scalar logdet;
};

template <typename Scalar>
Eigen::LLT<Matrix<Scalar>> factorize(const Matrix<Scalar>& corr, const char* context) {
  Eigen::LLT<Matrix<Scalar>> llt(corr);
  if (llt.info() != Eigen::Success) {
    throw FactorizationError(std::string(context) +
                             ": correlation matrix is not numerically positive definite "
                             "(near-duplicate locations or extreme range)");
  }
  const auto diag = llt.matrixLLT().diagonal();
  if (!diag.allFinite() || !(diag.minCoeff() > 0)) {
    throw FactorizationError(std::string(context) + ": degenerate Cholesky factor");
  }
  return llt;
}

template <typename Scalar>
QuadraticForm<Scalar> quadratic_form(const Matrix<Scalar>& corr, const Vector<Scalar>& z,
                                     const char* context = "quadratic_form") {
  const auto llt = factorize(corr, context);
  const Vector<Scalar> y = llt.matrixL().solve(z);
  const Scalar logdet = 2 * llt.matrixLLT().diagonal().array().log().sum();
  return {y.squaredNorm(), logdet};
}

/// log L(sigma2, rho) = -(n/2) log(2 pi sigma2) - (1/2) log|Gamma| - z' Gamma^-1 z / (2 sigma2).
template <typename Scalar>
Scalar log_likelihood(const Vector<Scalar>& z, const Design<Scalar>& design,
                      const MaternParams<Scalar>& params) {
  detail::check_observations(z, design);
  const auto form = quadratic_form(correlation_matrix(design, params.rho(), params.nu()), z,
                                   "log_likelihood");
  const Scalar n = Scalar(z.size());
  return -Scalar(0.5) * n * std::log(2 * std::numbers::pi_v<Scalar> * params.sigma2()) -
         Scalar(0.5) * form.logdet - form.quad / (2 * params.sigma2());
}

/// sigma2_hat(rho) = z' Gamma(rho)^-1 z / n.
template <typename Scalar>
Scalar profile_sigma2(const Vector<Scalar>& z, const Design<Scalar>& design, Scalar rho, Scalar nu) {
  detail::check_observations(z, design);
  const auto form = quadratic_form(correlation_matrix(design, rho, nu), z, "profile_sigma2");
  return form.quad / Scalar(z.size());
}

/// Profile likelihood of rho, optionally with a tapered correlation matrix.
/// Holds the pairwise distances so repeated evaluations only rebuild correlations.
template <typename Scalar>
class ProfileLikelihood {
 public:
  struct Point {
    Scalar rho;
    Scalar sigma2;
    Scalar loglik;
    Scalar logdet;
  };

  ProfileLikelihood(const Vector<Scalar>& z, const Design<Scalar>& design, Scalar nu,
                    std::optional<Scalar> taper_range = std::nullopt)
      : z_(z), distances_(pairwise_distances(design)), nu_(nu), taper_range_(taper_range) {
    detail::check_observations(z, design);
    if (!(nu > 0)) throw DomainError("ProfileLikelihood: nu must be positive");
    if (taper_range && !(*taper_range > 0)) {
      throw DomainError("ProfileLikelihood: taper_range must be positive");
    }
    if (z.squaredNorm() == 0) {
      throw DegenerateObservations("degenerate observations: the data vector is identically zero");
    }
  }

  Index size() const { return z_.size(); }
  Scalar nu() const { return nu_; }

  /// -(n/2) log(2 pi sigma2_hat) - (1/2) log|Gamma| - n/2.
  Point evaluate(Scalar rho) const {
    const auto form = quadratic_form(correlation_from_distances(distances_, rho, nu_, taper_range_),
                                     z_, "profile_loglik");
    const Scalar n = Scalar(size());
    const Scalar sigma2 = form.quad / n;
    if (!(sigma2 > 0)) {
      throw DegenerateObservations("degenerate observations: profile variance is zero");
    }
    const Scalar loglik = -Scalar(0.5) * n * std::log(2 * std::numbers::pi_v<Scalar> * sigma2) -
                          Scalar(0.5) * form.logdet - Scalar(0.5) * n;
    return {rho, sigma2, loglik, form.logdet};
  }

 private:
  Vector<Scalar> z_;
  Matrix<Scalar> distances_;
  Scalar nu_;
  std::optional<Scalar> taper_range_;
};

template <typename Scalar>
Scalar profile_loglik(const Vector<Scalar>& z, const Design<Scalar>& design, Scalar rho, Scalar nu) {
  return ProfileLikelihood<Scalar>(z, design, nu).evaluate(rho).loglik;
}

/// c_hat(rho) = z' Gamma(rho)^-1 z / (n rho^(2 nu)), with an optional taper.
template <typename Scalar>
Scalar microergodic_estimate(const Vector<Scalar>& z, const Design<Scalar>& design, Scalar rho,
                             Scalar nu, std::optional<Scalar> taper_range = std::nullopt) {
  detail::check_observations(z, design);
  const Matrix<Scalar> corr = taper_range ? tapered_correlation_matrix(design, rho, nu, *taper_range)
                                          : correlation_matrix(design, rho, nu);
  const auto form = quadratic_form(corr, z, "microergodic_estimate");
  return form.quad / (Scalar(z.size()) * std::pow(rho, 2 * nu));
}

namespace detail {

template <typename Scalar>
FitResult<Scalar> finish_fit(const typename ProfileLikelihood<Scalar>::Point& best, Scalar nu,
                             Index n, Index n_for_ci, FitMode mode) {
  FitResult<Scalar> out;
  out.rho_hat = best.rho;
  out.sigma2_hat = best.sigma2;
  out.c_hat = microergodic(best.sigma2, best.rho, nu);
  out.loglik = best.loglik;
  std::tie(out.ci_lower, out.ci_upper) = microergodic_interval(out.c_hat, n_for_ci);
  out.n = n;
  out.mode = mode;
  return out;
}

/// Grid scan of the profile likelihood on log(rho), then Brent refinement between
/// the neighbours of the best grid point.
template <typename Scalar>
FitResult<Scalar> maximize_profile(const ProfileLikelihood<Scalar>& profile,
                                   const FitConfig<Scalar>& config, FitMode mode) {
  config.validate();
  using Point = typename ProfileLikelihood<Scalar>::Point;
  const Scalar log_lo = std::log(config.rho_lower);
  const Scalar log_hi = std::log(config.rho_upper);

  int evaluations = 0;
  int failures = 0;
  auto try_evaluate = [&](Scalar log_rho) -> std::optional<Point> {
    ++evaluations;
    try {
      return profile.evaluate(std::exp(log_rho));
    } catch (const FactorizationError&) {
      ++failures;
      return std::nullopt;
    }
  };

  const auto grid = linear_grid(log_lo, log_hi, config.grid_points);
  std::optional<Point> best;
  std::size_t best_index = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto point = try_evaluate(grid[k]);
    if (point && (!best || point->loglik > best->loglik)) {
      best = point;
      best_index = k;
    }
  }
  if (!best) {
    throw FactorizationError("fit: every correlation matrix on the rho grid failed to factorize");
  }

  const Scalar left = grid[best_index == 0 ? 0 : best_index - 1];
  const Scalar right = grid[std::min(best_index + 1, grid.size() - 1)];
  auto negative_loglik = [&](Scalar log_rho) {
    const auto point = try_evaluate(log_rho);
    return point ? -point->loglik : std::numeric_limits<Scalar>::infinity();
  };
  const auto refined = brent_minimize(negative_loglik, left, right, config.tolerance / 2);
  if (std::isfinite(refined.value) && -refined.value > best->loglik) {
    // Re-evaluate so sigma2 and loglik come from exactly the returned rho.
    best = profile.evaluate(std::exp(refined.x));
  }

  auto result = finish_fit<Scalar>(*best, profile.nu(), profile.size(), profile.size(), mode);
  const Scalar log_rho_hat = std::log(result.rho_hat);
  if (log_rho_hat - log_lo <= config.tolerance) {
    result.boundary = BoundaryHit::lower;
  } else if (log_hi - log_rho_hat <= config.tolerance) {
    result.boundary = BoundaryHit::upper;
  }
  result.evaluations = evaluations;
  result.failed_evaluations = failures;
  return result;
}

}  // namespace detail

/// Joint maximum likelihood for (sigma2, rho) with rho restricted to
/// [config.rho_lower, config.rho_upper].
template <typename Scalar>
FitResult<Scalar> fit_mle(const Vector<Scalar>& z, const Design<Scalar>& design,
                          const FitConfig<Scalar>& config) {
  config.validate();
  const ProfileLikelihood<Scalar> profile(z, design, config.nu);
  return detail::maximize_profile(profile, config, FitMode::mle);
}

/// Maximum likelihood for sigma2 with rho fixed at rho1. The interval for c uses
/// n_for_ci as the sample size.
template <typename Scalar>
FitResult<Scalar> fit_fixed_rho(const Vector<Scalar>& z, const Design<Scalar>& design, Scalar rho1,
                                Scalar nu, Index n_for_ci) {
  if (!(rho1 > 0)) throw DomainError("fit_fixed_rho: rho1 must be positive");
  const ProfileLikelihood<Scalar> profile(z, design, nu);
  auto result = detail::finish_fit<Scalar>(profile.evaluate(rho1), nu, profile.size(), n_for_ci,
                                           FitMode::fixed_rho);
  result.evaluations = 1;
  return result;
}

template <typename Scalar>
FitResult<Scalar> fit_fixed_rho(const Vector<Scalar>& z, const Design<Scalar>& design, Scalar rho1,
                                Scalar nu) {
  return fit_fixed_rho(z, design, rho1, nu, z.size());
}

/// One-taper maximum likelihood: Gamma(rho) is replaced by Gamma(rho) o T where T is
/// the Wendland-1 taper at taper_range. The interval for c reuses 2 c^2 / n.
template <typename Scalar>
FitResult<Scalar> fit_tapered(const Vector<Scalar>& z, const Design<Scalar>& design,
                              const FitConfig<Scalar>& config, Scalar taper_range) {
  config.validate();
  if (!(taper_range > 0)) throw DomainError("fit_tapered: taper_range must be positive");
  const ProfileLikelihood<Scalar> profile(z, design, config.nu, std::optional<Scalar>(taper_range));
  return detail::maximize_profile(profile, config, FitMode::tapered_mle);
}

}  // namespace gpgeo
