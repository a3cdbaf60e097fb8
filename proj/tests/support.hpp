#pragma once

// Shared helpers for the test binaries: independent reference computations and
// random inputs.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "gpgeo/rng.hpp"
#include "gpgeo/types.hpp"

namespace oracle {

/// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt by the trapezoid rule in long
/// double. The integrand is smooth and decays double exponentially, so the rule
/// converges geometrically in the step.
inline long double bessel_k(long double nu, long double x) {
  const long double step = 1e-3L;
  long double sum = 0.5L * std::exp(-x);
  for (long double t = step;; t += step) {
    const long double term = std::exp(-x * std::cosh(t)) * std::cosh(nu * t);
    sum += term;
    if (term < 1e-40L * sum && x * std::cosh(t) > 50) break;
  }
  return sum * step;
}

inline long double matern(long double h, long double rho, long double nu) {
  if (h == 0) return 1;
  const long double x = h / rho;
  return std::pow(x, nu) * bessel_k(nu, x) / (std::tgamma(nu) * std::pow(2.0L, nu - 1));
}

/// Integral over the real line of g, by the trapezoid rule after omega = sinh(u).
template <typename G>
long double integrate_real_line(G&& g, long double limit = 30, long double step = 1e-3L) {
  long double sum = 0;
  for (long double u = -limit; u <= limit; u += step) sum += g(std::sinh(u)) * std::cosh(u);
  return sum * step;
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const gpgeo::Matrix<double>& a) {
  return Eigen::SelfAdjointEigenSolver<gpgeo::Matrix<double>>(a, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

/// Root in (lo, hi) of an increasing function by plain bisection.
template <typename F>
double bisect(F&& f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle

namespace testing_support {

/// Uniform points in [0, 1]^d, rejecting any closer than min_gap to an earlier one.
inline gpgeo::Design<double> random_design(gpgeo::RngStream& rng, int n, int d, double min_gap = 0.01) {
  gpgeo::Design<double>::CoordMatrix coords(n, d);
  for (int i = 0; i < n; ++i) {
    for (bool spread = false; !spread;) {
      for (int j = 0; j < d; ++j) coords(i, j) = rng.uniform(0, 1);
      spread = true;
      for (int k = 0; k < i && spread; ++k) spread = (coords.row(i) - coords.row(k)).norm() >= min_gap;
    }
  }
  return gpgeo::Design<double>(std::move(coords));
}

inline double log_uniform(gpgeo::RngStream& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream(path, std::ios::binary) << content;
}

/// Fresh empty directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gpgeo_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Runs a shell command and returns its exit status.
inline int run(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace testing_support
