#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "gpgeo/errors.hpp"

namespace gpgeo {

template <typename Scalar>
struct ScalarMinimum {
  Scalar x;
  Scalar value;
  int evaluations;
};

/// Brent's method (golden section with parabolic steps) for a minimum of f on
/// [lower, upper]. Stops when the bracket around the best point is narrower than
/// about 2 * abs_tol. Non-finite values of f are tolerated: the parabolic step is
/// rejected and a golden-section step taken instead.
template <typename Scalar, typename F>
ScalarMinimum<Scalar> brent_minimize(F&& f, Scalar lower, Scalar upper, Scalar abs_tol,
                                     int max_iterations = 500) {
  if (!(lower < upper)) throw DomainError("brent_minimize: lower must be below upper");
  if (!(abs_tol > 0)) throw DomainError("brent_minimize: tolerance must be positive");

  const Scalar golden = Scalar(0.5) * (3 - std::sqrt(Scalar(5)));
  const Scalar eps = std::sqrt(std::numeric_limits<Scalar>::epsilon());
  Scalar a = lower;
  Scalar b = upper;
  Scalar x = a + golden * (b - a);
  Scalar w = x;
  Scalar v = x;
  Scalar fx = f(x);
  Scalar fw = fx;
  Scalar fv = fx;
  Scalar d = 0;
  Scalar e = 0;
  int evaluations = 1;

  for (int iter = 0; iter < max_iterations; ++iter) {
    const Scalar mid = Scalar(0.5) * (a + b);
    const Scalar tol1 = eps * std::abs(x) * Scalar(1e-4) + abs_tol;
    const Scalar tol2 = 2 * tol1;
    if (std::abs(x - mid) <= tol2 - Scalar(0.5) * (b - a)) break;

    bool golden_step = true;
    if (std::abs(e) > tol1) {
      Scalar r = (x - w) * (fx - fv);
      Scalar q = (x - v) * (fx - fw);
      Scalar p = (x - v) * q - (x - w) * r;
      q = 2 * (q - r);
      if (q > 0) p = -p;
      q = std::abs(q);
      const Scalar e_prev = e;
      e = d;
      if (std::isfinite(p) && std::isfinite(q) && std::abs(p) < std::abs(Scalar(0.5) * q * e_prev) &&
          p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const Scalar u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (mid >= x) ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x >= mid) ? a - x : b - x;
      d = golden * e;
    }

    const Scalar u = (std::abs(d) >= tol1) ? x + d : x + (d > 0 ? tol1 : -tol1);
    const Scalar fu = f(u);
    ++evaluations;

    if (fu <= fx) {
      if (u >= x) {
        a = x;
      } else {
        b = x;
      }
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      if (u < x) {
        a = u;
      } else {
        b = u;
      }
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  return {x, fx, evaluations};
}

/// Evenly spaced grid of `points` values on [lower, upper], endpoints included.
template <typename Scalar>
std::vector<Scalar> linear_grid(Scalar lower, Scalar upper, int points) {
  if (points < 2) throw DomainError("linear_grid: need at least two points");
  std::vector<Scalar> grid(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    grid[static_cast<std::size_t>(k)] =
        (k == points - 1) ? upper : lower + (upper - lower) * Scalar(k) / Scalar(points - 1);
  }
  return grid;
}

}  // namespace gpgeo
