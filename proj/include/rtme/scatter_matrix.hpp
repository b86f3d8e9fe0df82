#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "rtme/errors.hpp"

namespace rtme {

using Index = Eigen::Index;

namespace detail {

// Fixed-order sum of squares; used where two quadratic forms must round
// identically (see acg_nll).
inline double squared_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

inline std::span<const double> column_span(const Eigen::MatrixXd& m, Index j) {
  return {m.data() + j * m.rows(), static_cast<std::size_t>(m.rows())};
}

}  // namespace detail

// Symmetric positive-definite p x p matrix together with its lower Cholesky
// factor L (S = L L^T). Immutable; every instance has passed the PD test, so
// readers may share it freely across threads.
class ScatterMatrix {
 public:
  // Throws DimensionError (non-square), DomainError (non-finite or
  // asymmetric beyond 1e-12 relative), NotPositiveDefinite.
  explicit ScatterMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
      throw DimensionError("scatter matrix must be square and non-empty, got " +
                           std::to_string(entries_.rows()) + "x" +
                           std::to_string(entries_.cols()));
    }
    if (!entries_.allFinite()) throw DomainError("scatter matrix has non-finite entries");
    const Index p = entries_.rows();
    for (Index j = 0; j < p; ++j) {
      for (Index i = j + 1; i < p; ++i) {
        const double a = entries_(i, j);
        const double b = entries_(j, i);
        if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) {
          throw DomainError("scatter matrix is not symmetric at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
        }
      }
    }
    llt_.compute(entries_);
    if (llt_.info() != Eigen::Success) {
      throw NotPositiveDefinite("Cholesky factorization failed: matrix is not positive definite");
    }
    const auto diag = llt_.matrixLLT().diagonal();
    if (!(diag.array() > 0.0).all() || !diag.allFinite()) {
      throw NotPositiveDefinite("Cholesky factor has a non-positive diagonal");
    }
  }

  static ScatterMatrix identity(Index p) {
    return ScatterMatrix(Eigen::MatrixXd::Identity(p, p));
  }

  Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(Index i, Index j) const { return entries_(i, j); }

  Eigen::MatrixXd lower_factor() const { return llt_.matrixL(); }

  double log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  }

  double trace() const { return entries_.trace(); }

  // Y = L^{-1} X, column by column.
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& x) const {
    if (x.rows() != dim()) throw DimensionError("whiten: dimension mismatch");
    Eigen::MatrixXd y = x;
    llt_.matrixL().solveInPlace(y);
    return y;
  }

  // x^T S^{-1} x = |L^{-1} x|^2.
  double inverse_quadratic_form(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw DimensionError("quadratic form: dimension mismatch");
    Eigen::VectorXd y = x;
    llt_.matrixL().solveInPlace(y);
    return detail::squared_norm({y.data(), static_cast<std::size_t>(y.size())});
  }

  Eigen::MatrixXd inverse() const {
    return llt_.solve(Eigen::MatrixXd::Identity(dim(), dim()));
  }

 private:
  Eigen::MatrixXd entries_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// (M + M^T) / 2.
inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace rtme
