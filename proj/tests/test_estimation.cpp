#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gpgeo/estimation.hpp"
#include "gpgeo/simulation.hpp"
#include "support.hpp"

using namespace gpgeo;
using doctest::Approx;
using Coords = Design<double>::CoordMatrix;

namespace {

Design<double> line(std::initializer_list<double> xs) {
  Coords coords(static_cast<Index>(xs.size()), 1);
  Index i = 0;
  for (double x : xs) coords(i++, 0) = x;
  return Design<double>(coords);
}

Vector<double> vec(std::initializer_list<double> values) {
  Vector<double> v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("log likelihood, scalar cases") {
  const auto one = line({0.0});
  CHECK(log_likelihood(vec({0.0}), one, MaternParams<double>(1, 0.3, 0.5)) ==
        Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-15));
  CHECK(log_likelihood(vec({2.0}), one, MaternParams<double>(4, 0.3, 0.5)) ==
        Approx(-2.1120857137646181).epsilon(1e-15));
  CHECK(profile_loglik(vec({2.0}), one, 0.3, 0.5) == Approx(-2.1120857137646181).epsilon(1e-15));
}

TEST_CASE("log likelihood matches a direct multivariate normal density") {
  RngStream rng(21, 0, StreamPurpose::verify);
  const auto d = testing_support::random_design(rng, 12, 2);
  const Vector<double> z = rng.normals(12);
  const MaternParams<double> p(1.7, 0.2, 1.5);
  const Matrix<double> cov = p.sigma2() * correlation_matrix(d, p.rho(), p.nu());
  const Eigen::FullPivLU<Matrix<double>> lu(cov);
  const double expected = -0.5 * 12 * std::log(2 * std::numbers::pi) - 0.5 * std::log(lu.determinant()) -
                          0.5 * z.dot(lu.solve(z));
  CHECK(log_likelihood(z, d, p) == Approx(expected).epsilon(1e-11));
}

TEST_CASE("profile variance") {
  CHECK(profile_sigma2(vec({2.0}), line({0.0}), 1.0, 0.5) == Approx(4.0));
  CHECK(profile_sigma2(vec({0.0, 0.0}), line({0.0, 1.0}), 1.0, 0.5) == 0.0);
  CHECK(profile_sigma2(vec({1.0, 1.0}), line({0.0, 1.0}), 1.0, 0.5) ==
        Approx(0.73105857863000488).epsilon(1e-14));
  // Against the closed-form 2 x 2 inverse.
  const double r = std::exp(-1.0);
  CHECK(profile_sigma2(vec({1.0, 1.0}), line({0.0, 1.0}), 1.0, 0.5) ==
        Approx(2 * (1 - r) / (1 - r * r) / 2).epsilon(1e-14));
}

TEST_CASE("profile log likelihood is the maximum over sigma2") {
  RngStream rng(22, 0, StreamPurpose::verify);
  for (int k = 0; k < 20; ++k) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const auto design = testing_support::random_design(rng, 15, d);
    const Vector<double> z = rng.normals(15);
    const double rho = testing_support::log_uniform(rng, 0.02, 0.3);
    const double nu = rng.uniform(0.3, 2.5);
    const double profiled = profile_loglik(z, design, rho, nu);
    const double s2 = profile_sigma2(z, design, rho, nu);
    CHECK(log_likelihood(z, design, MaternParams<double>(s2, rho, nu)) == Approx(profiled).epsilon(1e-12));
    for (double factor = 0.5; factor <= 2.0; factor += 0.05) {
      CHECK(log_likelihood(z, design, MaternParams<double>(s2 * factor, rho, nu)) <= profiled + 1e-12);
    }
  }
}

TEST_CASE("microergodic parameter and interval") {
  CHECK(microergodic(1.0, 1.0, 0.7) == 1.0);
  CHECK(microergodic(2.0, 0.5, 0.5) == Approx(4.0));
  CHECK(microergodic(1.0, 0.033380820069533409, 0.5) == Approx(29.957322735539908).epsilon(1e-12));
  const auto [lo, hi] = microergodic_interval(1.0, 200);
  CHECK(lo == Approx(1 - 0.196).epsilon(1e-12));
  CHECK(hi == Approx(1 + 0.196).epsilon(1e-12));
  CHECK_THROWS_AS(microergodic(0.0, 1.0, 0.5), DomainError);
}

TEST_CASE("c_hat is nonincreasing in rho") {
  RngStream rng(23, 0, StreamPurpose::verify);
  const double nus[] = {0.5, 1.0, 1.5, 2.5};
  for (int k = 0; k < 200; ++k) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int n = 5 + static_cast<int>(rng.below(30));
    const double nu = nus[rng.below(4)];
    const auto design = testing_support::random_design(rng, n, d);
    const Vector<double> z = rng.normals(n);
    double r1 = testing_support::log_uniform(rng, 0.01, 0.3);
    double r2 = testing_support::log_uniform(rng, 0.01, 0.3);
    if (r1 > r2) std::swap(r1, r2);
    CHECK(microergodic_estimate(z, design, r2, nu) <= microergodic_estimate(z, design, r1, nu) * (1 + 1e-9));
    const double taper = rng.uniform(0.1, 1.0);
    CHECK(microergodic_estimate(z, design, r2, nu, std::optional<double>(taper)) <=
          microergodic_estimate(z, design, r1, nu, std::optional<double>(taper)) * (1 + 1e-9));
  }
}

TEST_CASE("fixed-rho fit") {
  RngStream rng(24, 0, StreamPurpose::verify);
  const auto design = testing_support::random_design(rng, 30, 2);
  const Vector<double> z = rng.normals(30);
  const auto fit = fit_fixed_rho(z, design, 0.1, 0.5);
  CHECK(fit.mode == FitMode::fixed_rho);
  CHECK(fit.rho_hat == 0.1);
  CHECK(fit.sigma2_hat == Approx(profile_sigma2(z, design, 0.1, 0.5)).epsilon(1e-14));
  CHECK(fit.c_hat == Approx(microergodic_estimate(z, design, 0.1, 0.5)).epsilon(1e-14));
  CHECK(fit.ci_lower == Approx(fit.c_hat * (1 - 1.96 * std::sqrt(2.0 / 30))));
  CHECK(fit.ci_upper == Approx(fit.c_hat * (1 + 1.96 * std::sqrt(2.0 / 30))));
  CHECK_THROWS_AS(fit_fixed_rho(z, design, -0.1, 0.5), DomainError);
}

TEST_CASE("maximum likelihood fit reaches the profile maximum") {
  ExperimentConfig config;
  RngStream design_rng(25, 0, StreamPurpose::design);
  const auto population = perturbed_grid(config, design_rng);
  RngStream subset_rng(25, 0, StreamPurpose::subset);
  const std::vector<int> sizes{150};
  const auto design = nested_subsets(population, sizes, subset_rng).designs[0];
  for (double nu : {0.5, 1.5}) {
    const MaternParams<double> truth(1.0, effective_range_to_rho(0.3, nu), nu);
    RngStream rng(25, 1);
    const Vector<double> z = simulate_gp(design, truth, rng.normals(150));
    FitConfig<double> fc;
    fc.nu = nu;
    fc.rho_lower = 1e-6;
    fc.rho_upper = 15 * truth.rho();
    const auto fit = fit_mle(z, design, fc);
    CHECK(fit.mode == FitMode::mle);
    CHECK(fit.boundary == BoundaryHit::none);
    CHECK(fit.loglik == Approx(profile_loglik(z, design, fit.rho_hat, nu)).epsilon(1e-13));
    // No point of a fine scan beats the optimum.
    for (double t = 0; t <= 1; t += 0.002) {
      const double rho = std::exp(std::log(fc.rho_lower) + t * std::log(fc.rho_upper / fc.rho_lower));
      CHECK(profile_loglik(z, design, rho, nu) <= fit.loglik + 1e-9);
    }
    // The microergodic parameter is estimated far better than rho itself.
    CHECK(std::abs(std::log(fit.c_hat / truth.microergodic())) < 0.5);
  }
}

TEST_CASE("boundary hits are reported") {
  RngStream rng(26, 0, StreamPurpose::verify);
  const auto design = testing_support::random_design(rng, 40, 2, 0.05);
  const MaternParams<double> truth(1.0, 0.5, 0.5);
  const Vector<double> z = simulate_gp(design, truth, rng.normals(40));
  FitConfig<double> fc;
  // Strongly correlated data, range capped far below the truth.
  fc.rho_lower = 0.01;
  fc.rho_upper = 0.05;
  const auto capped = fit_mle(z, design, fc);
  CHECK(capped.boundary == BoundaryHit::upper);
  CHECK(capped.rho_hat == Approx(0.05).epsilon(1e-7));
  // White noise, range floored far above zero.
  const Vector<double> noise = rng.normals(40);
  fc.rho_lower = 0.2;
  fc.rho_upper = 2.0;
  CHECK(fit_mle(noise, design, fc).boundary == BoundaryHit::lower);
}

TEST_CASE("tapered fit") {
  RngStream rng(27, 0, StreamPurpose::verify);
  const auto design = testing_support::random_design(rng, 40, 2);
  const Vector<double> z = rng.normals(40);
  FitConfig<double> fc;
  fc.rho_lower = 1e-3;
  fc.rho_upper = 2;
  const auto plain = fit_mle(z, design, fc);
  const auto untapered = fit_tapered(z, design, fc, std::numeric_limits<double>::infinity());
  CHECK(untapered.rho_hat == plain.rho_hat);
  CHECK(untapered.sigma2_hat == plain.sigma2_hat);
  CHECK(untapered.c_hat == plain.c_hat);
  CHECK(untapered.mode == FitMode::tapered_mle);

  const auto single = line({0.3});
  const auto a = fit_mle(vec({1.3}), single, fc);
  const auto b = fit_tapered(vec({1.3}), single, fc, 0.01);
  CHECK(a.c_hat == b.c_hat);
  CHECK(a.sigma2_hat == b.sigma2_hat);

  const auto tapered = fit_tapered(z, design, fc, 0.3);
  CHECK(std::isfinite(tapered.c_hat));
  CHECK_THROWS_AS(fit_tapered(z, design, fc, 0.0), DomainError);
}

TEST_CASE("estimation input errors") {
  const auto design = line({0.0, 1.0, 2.0});
  FitConfig<double> fc;
  CHECK_THROWS_AS(fit_mle(vec({0.0, 0.0, 0.0}), design, fc), DegenerateObservations);
  CHECK_THROWS_WITH_AS(fit_fixed_rho(vec({0.0, 0.0, 0.0}), design, 1.0, 0.5),
                       doctest::Contains("degenerate observations"), DegenerateObservations);
  CHECK_THROWS_AS(fit_mle(vec({1.0, 2.0}), design, fc), DimensionMismatch);
  CHECK_THROWS_AS(log_likelihood(vec({1.0, std::nan(""), 2.0}), design, MaternParams<double>(1, 1, 0.5)),
                  DomainError);
  fc.rho_lower = 2;
  fc.rho_upper = 1;
  CHECK_THROWS_AS(fit_mle(vec({1.0, 2.0, 3.0}), design, fc), DomainError);
  CHECK_THROWS_AS(MaternParams<double>(-1, 1, 0.5), DomainError);
}

TEST_CASE("near-duplicate locations surface as a factorization error") {
  Coords coords(2, 1);
  coords << 0.0, 1e-14;
  const Design<double> design(coords);
  CHECK_THROWS_AS(profile_sigma2(vec({1.0, -1.0}), design, 10.0, 2.5), FactorizationError);
}
