#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gpgeo/prediction.hpp"
#include "gpgeo/simulation.hpp"
#include "support.hpp"

using namespace gpgeo;
using doctest::Approx;
using Coords = Design<double>::CoordMatrix;

namespace {

Design<double> grid_1d(int n) {
  Coords coords(n, 1);
  for (int k = 0; k < n; ++k) coords(k, 0) = static_cast<double>(k) / n;
  return Design<double>(coords);
}

Location<double> point(double x) {
  Location<double> s(1);
  s << x;
  return s;
}

}  // namespace

TEST_CASE("kriging interpolates the data") {
  RngStream rng(31, 0, StreamPurpose::verify);
  const auto design = testing_support::random_design(rng, 30, 2);
  const Vector<double> z = rng.normals(30);
  const KrigingSystem<double> system(design, 0.15, 1.5);
  for (Index i = 0; i < design.size(); ++i) {
    CHECK(system.predict(z, design.location(i)) == Approx(z(i)).epsilon(1e-10));
    const Vector<double> w = system.weights(design.location(i));
    CHECK((w - Vector<double>::Unit(30, i)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(naive_mspe(design, design.location(i), 2.0, 0.15, 1.5) < 1e-12);
    CHECK(true_mspe(design, design.location(i), 0.05, MaternParams<double>(2.0, 0.15, 1.5)) < 1e-12);
  }
}

TEST_CASE("scalar kriging cases") {
  const auto single = grid_1d(1);
  Vector<double> z(1);
  z << 1.7;
  for (double h : {0.1, 0.5, 2.0}) {
    CHECK(krig_predict(z, single, point(h), 0.4, 0.5) == Approx(std::exp(-h / 0.4) * 1.7).epsilon(1e-14));
  }
  CHECK(naive_mspe(single, point(1.0), 1.0, 1.0, 0.5) == Approx(0.86466471676338731).epsilon(1e-14));
  CHECK(true_mspe(single, point(1.0), 2.0, MaternParams<double>(1.0, 1.0, 0.5)) ==
        Approx(0.92161912087458266).epsilon(1e-14));
  // Same value written out term by term: w = exp(-1/2), gamma0 = exp(-1).
  const double w = std::exp(-0.5);
  CHECK(true_mspe(single, point(1.0), 2.0, MaternParams<double>(1.0, 1.0, 0.5)) ==
        Approx(1 - 2 * w * std::exp(-1.0) + w * w).epsilon(1e-14));
}

TEST_CASE("prediction reverts to the mean far from the data") {
  RngStream rng(32, 0, StreamPurpose::verify);
  const auto design = testing_support::random_design(rng, 20, 2);
  const Vector<double> z = rng.normals(20);
  Location<double> far(2);
  far << 5.0, 5.0;
  CHECK(std::abs(krig_predict(z, design, far, 0.1, 0.5)) < 1e-15 * z.norm());
  CHECK(naive_mspe(design, far, 3.0, 0.1, 0.5) == Approx(3.0));
}

TEST_CASE("true MSPE at the true range is the naive MSPE") {
  RngStream rng(33, 0, StreamPurpose::verify);
  for (int k = 0; k < 50; ++k) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const auto design = testing_support::random_design(rng, 25, d);
    Location<double> s0(d);
    for (int j = 0; j < d; ++j) s0(j) = rng.uniform(0, 1);
    const MaternParams<double> truth(rng.uniform(0.5, 3), testing_support::log_uniform(rng, 0.02, 0.3),
                                     rng.uniform(0.3, 2.5));
    const double t = true_mspe(design, s0, truth.rho(), truth);
    const double v = naive_mspe(design, s0, truth.sigma2(), truth.rho(), truth.nu());
    CHECK(std::abs(t - v) <= 1e-10 * std::max(v, 1e-3));
    // Any other range does no better.
    CHECK(true_mspe(design, s0, truth.rho() * 3, truth) >= v - 1e-12);
    CHECK(true_mspe(design, s0, truth.rho() / 3, truth) >= v - 1e-12);
  }
}

TEST_CASE("batched evaluator agrees with the pointwise functions") {
  RngStream rng(34, 0, StreamPurpose::verify);
  const auto design = testing_support::random_design(rng, 40, 2);
  const auto targets = prediction_grid(4);
  const MaternParams<double> truth(1.5, 0.12, 1.5);
  const MspeEvaluator<double> evaluator(design, targets, truth);
  const auto plugin = evaluator.evaluate(0.3);
  for (Index j = 0; j < targets.size(); ++j) {
    const auto s0 = targets.location(j);
    CHECK(plugin.true_mspe(j) == Approx(true_mspe(design, s0, 0.3, truth)).epsilon(1e-10));
    CHECK(plugin.naive_factor(j) == Approx(naive_mspe(design, s0, 1.0, 0.3, 1.5)).epsilon(1e-10));
    CHECK(evaluator.optimal_mspe()(j) == Approx(naive_mspe(design, s0, 1.5, 0.12, 1.5)).epsilon(1e-10));
    CHECK((plugin.weights.col(j) - KrigingSystem<double>(design, 0.3, 1.5).weights(s0)).norm() < 1e-10);
  }
}

TEST_CASE("prediction intervals") {
  const auto [lo, hi] = prediction_interval(0.0, 1.0, 0.95);
  CHECK(lo == Approx(-1.959963984540054).epsilon(1e-12));
  CHECK(hi == Approx(1.959963984540054).epsilon(1e-12));
  const auto [a, b] = prediction_interval(2.5, 0.0, 0.9);
  CHECK(a == 2.5);
  CHECK(b == 2.5);
  CHECK_THROWS_AS(prediction_interval(0.0, -1.0, 0.95), DomainError);
  CHECK_THROWS_AS(prediction_interval(0.0, 1.0, 1.0), DomainError);
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.975) == Approx(1.959963984540054).epsilon(1e-14));
  CHECK(normal_quantile(1e-10) == Approx(-6.3613409024040557).epsilon(1e-12));
}

TEST_CASE("variance ratio curves") {
  const double nu = 0.5;
  const MaternParams<double> truth(1.0, effective_range_to_rho(0.3, nu), nu);
  const std::vector<Design<double>> designs{grid_1d(10), grid_1d(40), grid_1d(160)};
  const auto s0 = point(0.5 + 1.0 / 320);

  SUBCASE("all ratios are one at the true range") {
    for (const RatioKind<double>& kind :
         {RatioKind<double>(EfficiencyRatio{}), RatioKind<double>(FixedSigma2Ratio<double>{truth.sigma2()})}) {
      for (const auto& p : variance_ratio_curve(designs, s0, truth.rho(), truth, kind)) {
        CHECK(p.ratio == Approx(1.0).epsilon(1e-9));
      }
    }
  }
  SUBCASE("efficiency ratio decreases toward one") {
    const auto curve = variance_ratio_curve(designs, s0, 2 * truth.rho(), truth, EfficiencyRatio{});
    REQUIRE(curve.size() == 3);
    CHECK(curve[0].n == 10);
    CHECK(curve[0].ratio >= curve[1].ratio);
    CHECK(curve[1].ratio >= curve[2].ratio);
    CHECK(curve[2].ratio >= 1.0);
    CHECK(curve[2].ratio - 1 < 0.05);
  }
  SUBCASE("profiled variance tracks the matched variance") {
    const double rho_used = 2 * truth.rho();
    std::vector<Vector<double>> draws;
    for (const auto& d : designs) {
      RngStream rng(35, static_cast<std::uint64_t>(d.size()));
      draws.push_back(simulate_gp(d, truth, rng.normals(d.size())));
    }
    const auto matched = variance_ratio_curve(designs, s0, rho_used, truth,
                                              FixedSigma2Ratio<double>{matched_sigma2(truth, rho_used)});
    const auto profiled = variance_ratio_curve(designs, s0, rho_used, truth, ProfiledSigma2Ratio<double>{draws});
    for (std::size_t k = 0; k < designs.size(); ++k) {
      const double n = static_cast<double>(designs[k].size());
      CHECK(std::abs(profiled[k].ratio - matched[k].ratio) <= 3 * std::sqrt(2 / n) * matched[k].ratio);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(variance_ratio_curve(std::vector<Design<double>>{designs[1], designs[0]}, s0, 0.2, truth, EfficiencyRatio{}),
                    DomainError);
    CHECK_THROWS_AS(variance_ratio_curve(designs, point(0.5), 0.2, truth, EfficiencyRatio{}), DomainError);
    CHECK_THROWS_AS(variance_ratio_curve(designs, s0, 0.2, truth, ProfiledSigma2Ratio<double>{{}}),
                    DimensionMismatch);
  }
}

TEST_CASE("matched variance keeps the microergodic parameter") {
  const MaternParams<double> truth(1.3, 0.2, 1.5);
  const double s1 = matched_sigma2(truth, 0.6);
  CHECK(MaternParams<double>(s1, 0.6, 1.5).microergodic() == Approx(truth.microergodic()).epsilon(1e-14));
}
