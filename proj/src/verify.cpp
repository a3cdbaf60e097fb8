#include "gpgeo/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "gpgeo/covariance.hpp"
#include "gpgeo/estimation.hpp"
#include "gpgeo/prediction.hpp"
#include "gpgeo/rng.hpp"

namespace gpgeo {

namespace {

constexpr double kNuChoices[] = {0.5, 1.0, 1.5, 2.5};

/// Uniform locations in [0, 1]^d; a point closer than 0.01 to an earlier one is redrawn.
Design<double> random_design(RngStream& rng, int n, int d) {
  Design<double>::CoordMatrix coords(n, d);
  for (int i = 0; i < n; ++i) {
    bool spread = false;
    while (!spread) {
      for (int j = 0; j < d; ++j) coords(i, j) = rng.uniform(0, 1);
      spread = true;
      for (int k = 0; k < i && spread; ++k) spread = (coords.row(i) - coords.row(k)).norm() >= 0.01;
    }
  }
  return Design<double>(std::move(coords));
}

Location<double> random_target(RngStream& rng, int d) {
  Location<double> s0(d);
  for (int j = 0; j < d; ++j) s0(j) = rng.uniform(0, 1);
  return s0;
}

double log_uniform(RngStream& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

std::string fmt(const char* format, double a, double b) {
  char buffer[160];
  std::snprintf(buffer, sizeof buffer, format, a, b);
  return buffer;
}

/// Returns an empty string when the case holds, otherwise a description.
using Case = std::function<std::string(RngStream&)>;

SuiteResult run_suite(const std::string& name, const VerifyOptions& options, std::uint64_t offset,
                      const Case& check) {
  SuiteResult result;
  result.name = name;
  for (int k = 0; k < options.cases; ++k) {
    const std::uint64_t index = offset + static_cast<std::uint64_t>(k);
    RngStream rng(options.seed, index, StreamPurpose::verify);
    std::string failure;
    try {
      failure = check(rng);
    } catch (const std::exception& e) {
      failure = std::string("exception: ") + e.what();
    }
    if (failure.empty()) {
      ++result.passed;
    } else {
      if (result.failed == 0) {
        result.first_failed_case = static_cast<std::int64_t>(index);
        result.first_failure = failure;
      }
      ++result.failed;
    }
  }
  return result;
}

}  // namespace

std::vector<SuiteResult> run_verify(const VerifyOptions& options) {
  const double middle = options.flip_mspe_middle_sign ? 2.0 : -2.0;
  std::vector<SuiteResult> results;

  results.push_back(run_suite("closed_forms", options, 1'000'000, [](RngStream& rng) {
    const double rho = log_uniform(rng, 1e-3, 1e3);
    const double h = rho * log_uniform(rng, 1e-6, 50);
    for (double nu : {0.5, 1.5, 2.5}) {
      const double closed = matern_correlation(h, rho, nu);
      const double bessel = matern_correlation_bessel(h, rho, nu);
      if (std::abs(closed - bessel) > 1e-10 * std::abs(closed)) {
        return fmt("closed form %.17g vs Bessel %.17g", closed, bessel);
      }
    }
    return std::string();
  }));

  auto monotone = [](bool tapered) {
    return [tapered](RngStream& rng) {
      const int d = 1 + static_cast<int>(rng.below(3));
      const int n = 5 + static_cast<int>(rng.below(26));
      const double nu = kNuChoices[rng.below(4)];
      const auto design = random_design(rng, n, d);
      const Vector<double> z = rng.normals(n);
      double rho1 = log_uniform(rng, 0.01, 0.3);
      double rho2 = log_uniform(rng, 0.01, 0.3);
      if (rho1 > rho2) std::swap(rho1, rho2);
      std::optional<double> taper;
      if (tapered) taper = rng.uniform(0.2, 1.0);
      const double c1 = microergodic_estimate(z, design, rho1, nu, taper);
      const double c2 = microergodic_estimate(z, design, rho2, nu, taper);
      if (c2 > c1 * (1 + 1e-9)) return fmt("c_hat(rho2)=%.17g exceeds c_hat(rho1)=%.17g", c2, c1);
      return std::string();
    };
  };
  results.push_back(run_suite("c_hat_monotone_in_rho", options, 2'000'000, monotone(false)));
  results.push_back(run_suite("tapered_c_hat_monotone_in_rho", options, 3'000'000, monotone(true)));

  results.push_back(run_suite("mspe_reduction_identity", options, 4'000'000, [middle](RngStream& rng) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int n = 5 + static_cast<int>(rng.below(36));
    const double nu = kNuChoices[rng.below(4)];
    const auto design = random_design(rng, n, d);
    const MaternParams<double> truth(log_uniform(rng, 0.1, 10), log_uniform(rng, 0.02, 0.3), nu);
    const auto s0 = random_target(rng, d);
    const double t = detail::true_mspe_with(design, s0, truth.rho(), truth, middle);
    const double v = naive_mspe(design, s0, truth.sigma2(), truth.rho(), nu);
    if (std::abs(t - v) >= 1e-10 * truth.sigma2()) return fmt("true %.17g vs naive %.17g", t, v);
    return std::string();
  }));

  results.push_back(run_suite("mspe_optimality", options, 5'000'000, [middle](RngStream& rng) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int n = 5 + static_cast<int>(rng.below(36));
    const double nu = kNuChoices[rng.below(4)];
    const auto design = random_design(rng, n, d);
    const MaternParams<double> truth(1.0, log_uniform(rng, 0.02, 0.3), nu);
    const auto s0 = random_target(rng, d);
    const double rho_used = truth.rho() * log_uniform(rng, 0.2, 5);
    const double used = detail::true_mspe_with(design, s0, rho_used, truth, middle);
    const double best = naive_mspe(design, s0, truth.sigma2(), truth.rho(), nu);
    if (used < best - 1e-10) return fmt("mspe at rho_used %.17g below optimum %.17g", used, best);
    return std::string();
  }));

  results.push_back(run_suite("kriging_interpolation", options, 6'000'000, [middle](RngStream& rng) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int n = 5 + static_cast<int>(rng.below(36));
    const double nu = kNuChoices[rng.below(4)];
    const auto design = random_design(rng, n, d);
    const MaternParams<double> truth(1.0, log_uniform(rng, 0.02, 0.3), nu);
    const Vector<double> z = rng.normals(n);
    const Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    const auto s0 = design.location(i);
    const double z_hat = krig_predict(z, design, s0, truth.rho(), nu);
    if (std::abs(z_hat - z(i)) > 1e-9) return fmt("prediction %.17g at observed value %.17g", z_hat, z(i));
    const double naive = naive_mspe(design, s0, truth.sigma2(), truth.rho(), nu);
    const double t = detail::true_mspe_with(design, s0, truth.rho(), truth, middle);
    if (naive >= 1e-12 || t >= 1e-12) return fmt("MSPE at a data site: naive %.3g, true %.3g", naive, t);
    return std::string();
  }));

  results.push_back(run_suite("profile_likelihood_identity", options, 7'000'000, [](RngStream& rng) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int n = 5 + static_cast<int>(rng.below(36));
    const double nu = kNuChoices[rng.below(4)];
    const auto design = random_design(rng, n, d);
    const Vector<double> z = rng.normals(n);
    const double rho = log_uniform(rng, 0.02, 0.3);
    const double sigma2 = profile_sigma2(z, design, rho, nu);
    const double full = log_likelihood(z, design, MaternParams<double>(sigma2, rho, nu));
    const double profiled = profile_loglik(z, design, rho, nu);
    if (std::abs(full - profiled) > 1e-9 * std::max(1.0, std::abs(full))) {
      return fmt("loglik at sigma2_hat %.17g vs profile %.17g", full, profiled);
    }
    // sigma2_hat maximizes the likelihood in sigma2.
    for (double factor : {0.9, 1.1}) {
      const double nearby = log_likelihood(z, design, MaternParams<double>(sigma2 * factor, rho, nu));
      if (nearby > full) return fmt("loglik %.17g above the profile maximum %.17g", nearby, full);
    }
    return std::string();
  }));

  results.push_back(run_suite("spectral_density_tail_order", options, 8'000'000, [](RngStream& rng) {
    // With c fixed, f(omega) omega^(2 nu + d) tends to the same limit for every rho,
    // and the spectral density is decreasing in omega.
    const int d = 1 + static_cast<int>(rng.below(3));
    const double nu = kNuChoices[rng.below(4)];
    const double rho1 = log_uniform(rng, 0.02, 1);
    const double rho2 = rho1 * log_uniform(rng, 1.5, 10);
    const double omega = log_uniform(rng, 1e-2, 1e2);
    const double f_lo = matern_spectral_density(omega, rho1, nu, d);
    const double f_hi = matern_spectral_density(omega * 1.01, rho1, nu, d);
    if (!(f_hi < f_lo)) return fmt("density not decreasing: %.17g then %.17g", f_lo, f_hi);
    const double far = 1e6;
    // sigma2 = rho^(2 nu) keeps c = 1 for both ranges.
    const double t1 = std::pow(rho1, 2 * nu) * matern_spectral_density(far, rho1, nu, d);
    const double t2 = std::pow(rho2, 2 * nu) * matern_spectral_density(far, rho2, nu, d);
    if (std::abs(t1 / t2 - 1) > 1e-6) return fmt("tail ratio %.17g vs %.17g", t1, t2);
    return std::string();
  }));

  return results;
}

}  // namespace gpgeo
