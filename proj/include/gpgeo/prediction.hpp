#pragma once

// Simple kriging under a mean-zero Matérn model and its mean squared prediction
// error, both as the model itself reports it (naive) and as evaluated under a
// possibly different generating model (true).

#include <algorithm>
#include <cmath>
#include <optional>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "gpgeo/covariance.hpp"
#include "gpgeo/estimation.hpp"
#include "gpgeo/normal.hpp"
#include "gpgeo/types.hpp"

namespace gpgeo {

template <typename Scalar>
struct KrigingOutput {
  Location<Scalar> target;
  Scalar z_hat;
  Scalar naive_mspe;
  Scalar true_mspe;
};

/// Factorized Gamma_n(rho) for one design; the kriging weights for any target are
/// Gamma_n(rho)^-1 gamma_n(rho). Read-only after construction, so one system can
/// serve concurrent predictions.
template <typename Scalar>
class KrigingSystem {
 public:
  KrigingSystem(const Design<Scalar>& design, Scalar rho, Scalar nu)
      : design_(design),
        rho_(rho),
        nu_(nu),
        llt_(factorize(correlation_matrix(design, rho, nu), "kriging")) {}

  const Design<Scalar>& design() const { return design_; }
  Scalar rho() const { return rho_; }
  Scalar nu() const { return nu_; }
  const Eigen::LLT<Matrix<Scalar>>& factor() const { return llt_; }

  Vector<Scalar> weights(const Location<Scalar>& s0) const {
    return llt_.solve(cross_correlation(s0, design_, rho_, nu_));
  }

  /// Column j holds the weights for targets[j].
  Matrix<Scalar> weights(const Design<Scalar>& targets) const {
    return llt_.solve(cross_correlation(targets, design_, rho_, nu_));
  }

  Scalar predict(const Vector<Scalar>& z, const Location<Scalar>& s0) const {
    detail::check_observations(z, design_);
    return weights(s0).dot(z);
  }

  /// 1 - gamma' Gamma^-1 gamma, the naive MSPE per unit variance.
  Scalar naive_factor(const Location<Scalar>& s0) const {
    const Vector<Scalar> gamma = cross_correlation(s0, design_, rho_, nu_);
    const Vector<Scalar> half = llt_.matrixL().solve(gamma);
    return std::max(Scalar(0), 1 - half.squaredNorm());
  }

 private:
  Design<Scalar> design_;
  Scalar rho_;
  Scalar nu_;
  Eigen::LLT<Matrix<Scalar>> llt_;
};

/// Z_hat(rho) = gamma_n(rho)' Gamma_n(rho)^-1 z. Independent of sigma^2.
template <typename Scalar>
Scalar krig_predict(const Vector<Scalar>& z, const Design<Scalar>& design, const Location<Scalar>& s0,
                    Scalar rho, Scalar nu) {
  detail::check_observations(z, design);
  design.require_dim(s0);
  return KrigingSystem<Scalar>(design, rho, nu).predict(z, s0);
}

/// sigma^2 {1 - gamma_n(rho)' Gamma_n(rho)^-1 gamma_n(rho)}.
template <typename Scalar>
Scalar naive_mspe(const Design<Scalar>& design, const Location<Scalar>& s0, Scalar sigma2, Scalar rho,
                  Scalar nu) {
  if (!(sigma2 > 0)) throw DomainError("naive_mspe: sigma2 must be positive");
  design.require_dim(s0);
  return sigma2 * KrigingSystem<Scalar>(design, rho, nu).naive_factor(s0);
}

namespace detail {

/// sigma0^2 {1 + middle w' gamma(rho0) + w' Gamma(rho0) w}; middle is -2 except
/// when verify deliberately corrupts it.
template <typename Scalar>
Scalar true_mspe_with(const Design<Scalar>& design, const Location<Scalar>& s0, Scalar rho_used,
                      const MaternParams<Scalar>& truth, Scalar middle) {
  design.require_dim(s0);
  const Scalar nu = truth.nu();
  const Vector<Scalar> w = KrigingSystem<Scalar>(design, rho_used, nu).weights(s0);
  const auto llt0 = factorize(correlation_matrix(design, truth.rho(), nu), "true_mspe");
  const Vector<Scalar> gamma0 = cross_correlation(s0, design, truth.rho(), nu);
  const Vector<Scalar> spread = llt0.matrixU() * w;
  const Scalar value = truth.sigma2() * (1 + middle * w.dot(gamma0) + spread.squaredNorm());
  return std::max(Scalar(0), value);
}

}  // namespace detail

/// Error variance of Z_hat(rho_used) under the model `truth` (same nu):
///   sigma0^2 {1 - 2 w' gamma(rho0) + w' Gamma(rho0) w},  w = Gamma(rho_used)^-1 gamma(rho_used).
/// The quadratic term is evaluated as |L0' w|^2 with L0 L0' = Gamma(rho0).
template <typename Scalar>
Scalar true_mspe(const Design<Scalar>& design, const Location<Scalar>& s0, Scalar rho_used,
                 const MaternParams<Scalar>& truth) {
  return detail::true_mspe_with(design, s0, rho_used, truth, Scalar(-2));
}

/// Prediction, naive MSPE at (sigma2, rho) and true MSPE under `truth`.
template <typename Scalar>
KrigingOutput<Scalar> krig(const Vector<Scalar>& z, const Design<Scalar>& design,
                           const Location<Scalar>& s0, Scalar sigma2, Scalar rho,
                           const MaternParams<Scalar>& truth) {
  const KrigingSystem<Scalar> system(design, rho, truth.nu());
  KrigingOutput<Scalar> out;
  out.target = s0;
  out.z_hat = system.predict(z, s0);
  out.naive_mspe = sigma2 * system.naive_factor(s0);
  out.true_mspe = true_mspe(design, s0, rho, truth);
  return out;
}

/// z_hat +/- z_{(1+level)/2} sqrt(mspe).
template <typename Scalar>
std::pair<Scalar, Scalar> prediction_interval(Scalar z_hat, Scalar mspe, Scalar level) {
  if (!(mspe >= 0)) throw DomainError("prediction_interval: mspe must be nonnegative");
  const Scalar half = normal_two_sided_multiplier(level) * std::sqrt(mspe);
  return {z_hat - half, z_hat + half};
}

/// Naive and true MSPE for many targets against one generating model.
/// Gamma(rho0), gamma(rho0) and the optimal MSPE are computed once; evaluate()
/// then costs one factorization of Gamma(rho_used) and two n x m triangular products.
template <typename Scalar>
class MspeEvaluator {
 public:
  struct Plugin {
    Scalar rho_used;
    Matrix<Scalar> weights;       // n x m
    Vector<Scalar> naive_factor;  // 1 - w' gamma(rho_used), multiply by sigma2
    Vector<Scalar> true_mspe;     // under the generating model
  };

  MspeEvaluator(const Design<Scalar>& design, const Design<Scalar>& targets,
                const MaternParams<Scalar>& truth)
      : design_(design),
        targets_(targets),
        truth_(truth),
        distances_(pairwise_distances(design)),
        llt0_(factorize(correlation_from_distances(distances_, truth.rho(), truth.nu()),
                        "mspe truth")),
        gamma0_(cross_correlation(targets, design, truth.rho(), truth.nu())) {
    const Matrix<Scalar> half = llt0_.matrixL().solve(gamma0_);
    optimal_ = (truth_.sigma2() * (1 - half.colwise().squaredNorm().array()).max(Scalar(0))).matrix();
  }

  const MaternParams<Scalar>& truth() const { return truth_; }
  const Design<Scalar>& design() const { return design_; }
  const Design<Scalar>& targets() const { return targets_; }

  /// Naive MSPE at the true parameters for each target (the optimum).
  const Vector<Scalar>& optimal_mspe() const { return optimal_; }
  Scalar mean_optimal_mspe() const { return optimal_.mean(); }

  Plugin evaluate(Scalar rho_used) const {
    const Scalar nu = truth_.nu();
    const auto llt = factorize(correlation_from_distances(distances_, rho_used, nu), "mspe plug-in");
    const Matrix<Scalar> gamma = cross_correlation(targets_, design_, rho_used, nu);
    Plugin out;
    out.rho_used = rho_used;
    out.weights = llt.solve(gamma);
    const Matrix<Scalar> spread = llt0_.matrixU() * out.weights;
    const Index m = targets_.size();
    out.naive_factor.resize(m);
    out.true_mspe.resize(m);
    for (Index j = 0; j < m; ++j) {
      const Scalar fit = out.weights.col(j).dot(gamma.col(j));
      out.naive_factor(j) = std::max(Scalar(0), 1 - fit);
      const Scalar cross = out.weights.col(j).dot(gamma0_.col(j));
      out.true_mspe(j) =
          std::max(Scalar(0), truth_.sigma2() * (1 - 2 * cross + spread.col(j).squaredNorm()));
    }
    return out;
  }

 private:
  Design<Scalar> design_;
  Design<Scalar> targets_;
  MaternParams<Scalar> truth_;
  Matrix<Scalar> distances_;
  Eigen::LLT<Matrix<Scalar>> llt0_;
  Matrix<Scalar> gamma0_;
  Vector<Scalar> optimal_;
};

/// sigma_1^2 = sigma_0^2 (rho_used / rho_0)^(2 nu): the variance that matches the
/// true microergodic parameter at rho_used.
template <typename Scalar>
Scalar matched_sigma2(const MaternParams<Scalar>& truth, Scalar rho_used) {
  return truth.sigma2() * std::pow(rho_used / truth.rho(), 2 * truth.nu());
}

/// var_truth{Z_hat(rho_used) - Z0} / var_truth{Z_hat(rho0) - Z0}.
struct EfficiencyRatio {};

/// naive MSPE at (sigma2, rho_used) over the true MSPE of Z_hat(rho_used).
template <typename Scalar>
struct FixedSigma2Ratio {
  Scalar sigma2;
};

/// As FixedSigma2Ratio, with sigma2 profiled at rho_used from one realization per
/// design (realizations[k] is aligned with designs[k]).
template <typename Scalar>
struct ProfiledSigma2Ratio {
  std::vector<Vector<Scalar>> realizations;
};

template <typename Scalar>
using RatioKind = std::variant<EfficiencyRatio, FixedSigma2Ratio<Scalar>, ProfiledSigma2Ratio<Scalar>>;

template <typename Scalar>
struct RatioPoint {
  Index n;
  Scalar ratio;
};

/// Variance ratios along an increasing sequence of designs, all in closed form.
template <typename Scalar>
std::vector<RatioPoint<Scalar>> variance_ratio_curve(const std::vector<Design<Scalar>>& designs,
                                                     const Location<Scalar>& s0, Scalar rho_used,
                                                     const MaternParams<Scalar>& truth,
                                                     const std::type_identity_t<RatioKind<Scalar>>& kind) {
  if (const auto* profiled = std::get_if<ProfiledSigma2Ratio<Scalar>>(&kind)) {
    if (profiled->realizations.size() != designs.size()) {
      throw DimensionMismatch("variance_ratio_curve: one realization per design is required");
    }
  }
  std::vector<RatioPoint<Scalar>> curve;
  curve.reserve(designs.size());
  for (std::size_t k = 0; k < designs.size(); ++k) {
    const auto& design = designs[k];
    if (k > 0 && design.size() <= designs[k - 1].size()) {
      throw DomainError("variance_ratio_curve: designs must be strictly increasing in size");
    }
    design.require_dim(s0);
    const Scalar mspe_used = true_mspe(design, s0, rho_used, truth);
    if (!(mspe_used > 0)) {
      throw DomainError("variance_ratio_curve: target coincides with a design location");
    }
    Scalar ratio;
    if (std::holds_alternative<EfficiencyRatio>(kind)) {
      ratio = mspe_used / true_mspe(design, s0, truth.rho(), truth);
    } else {
      Scalar sigma2;
      if (const auto* fixed = std::get_if<FixedSigma2Ratio<Scalar>>(&kind)) {
        sigma2 = fixed->sigma2;
      } else {
        const auto& z = std::get<ProfiledSigma2Ratio<Scalar>>(kind).realizations[k];
        sigma2 = profile_sigma2(z, design, rho_used, truth.nu());
      }
      ratio = naive_mspe(design, s0, sigma2, rho_used, truth.nu()) / mspe_used;
    }
    curve.push_back({design.size(), ratio});
  }
  return curve;
}

}  // namespace gpgeo
