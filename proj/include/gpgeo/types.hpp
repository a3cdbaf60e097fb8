#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gpgeo/errors.hpp"

namespace gpgeo {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// A point in d-dimensional space, d in {1, 2, 3}.
template <typename Scalar>
using Location = Vector<Scalar>;

/// Marginal variance, range and smoothness of a Matérn model.
template <typename Scalar>
class MaternParams {
 public:
  MaternParams(Scalar sigma2, Scalar rho, Scalar nu) : sigma2_(sigma2), rho_(rho), nu_(nu) {
    if (!(sigma2 > 0) || !(rho > 0) || !(nu > 0) || !std::isfinite(sigma2) ||
        !std::isfinite(rho) || !std::isfinite(nu)) {
      throw DomainError("MaternParams: sigma2, rho and nu must be positive and finite");
    }
  }

  Scalar sigma2() const { return sigma2_; }
  Scalar rho() const { return rho_; }
  Scalar nu() const { return nu_; }

  /// sigma2 / rho^(2 nu)
  Scalar microergodic() const { return sigma2_ / std::pow(rho_, 2 * nu_); }

  bool operator==(const MaternParams&) const = default;

 private:
  Scalar sigma2_;
  Scalar rho_;
  Scalar nu_;
};

template <typename A, typename B>
auto euclidean_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a - b).norm();
}

/// Ordered set of distinct observation locations sharing one dimension.
/// Row i of coords() is location i.
template <typename Scalar>
class Design {
 public:
  using CoordMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit Design(CoordMatrix coords) : coords_(std::move(coords)) {
    if (coords_.rows() < 1) throw DomainError("Design: at least one location is required");
    if (coords_.cols() < 1 || coords_.cols() > 3) {
      throw DimensionMismatch("Design: dimension must be 1, 2 or 3, got " +
                              std::to_string(coords_.cols()));
    }
    if (!coords_.allFinite()) throw DomainError("Design: non-finite coordinate");
    if (size() > 1 && !(min_distance() > 0)) {
      throw DomainError("Design: locations must be pairwise distinct");
    }
  }

  Index size() const { return coords_.rows(); }
  int dim() const { return static_cast<int>(coords_.cols()); }
  const CoordMatrix& coords() const { return coords_; }
  Location<Scalar> location(Index i) const { return coords_.row(i).transpose(); }

  Scalar distance(Index i, Index j) const {
    return euclidean_distance(coords_.row(i), coords_.row(j));
  }

  Scalar min_distance() const {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index i = 1; i < size(); ++i) {
      for (Index j = 0; j < i; ++j) best = std::min(best, distance(i, j));
    }
    return best;
  }

  /// Rows picked by index, in the order given. Distinctness is inherited.
  Design subset(std::span<const Index> indices) const {
    CoordMatrix rows(static_cast<Index>(indices.size()), coords_.cols());
    for (Index k = 0; k < rows.rows(); ++k) {
      const Index i = indices[static_cast<std::size_t>(k)];
      if (i < 0 || i >= size()) throw DomainError("Design::subset: index out of range");
      rows.row(k) = coords_.row(i);
    }
    return Design(std::move(rows), Unchecked{});
  }

  /// This design followed by `other`; the union must still be distinct.
  Design concat(const Design& other) const {
    if (other.dim() != dim()) throw DimensionMismatch("Design::concat: dimension mismatch");
    CoordMatrix rows(size() + other.size(), coords_.cols());
    rows.topRows(size()) = coords_;
    rows.bottomRows(other.size()) = other.coords_;
    return Design(std::move(rows));
  }

  void require_dim(const Location<Scalar>& s0) const {
    if (s0.size() != dim()) {
      throw DimensionMismatch("location has dimension " + std::to_string(s0.size()) +
                              ", design has dimension " + std::to_string(dim()));
    }
  }

 private:
  struct Unchecked {};
  Design(CoordMatrix coords, Unchecked) : coords_(std::move(coords)) {}

  CoordMatrix coords_;
};

}  // namespace gpgeo
