#pragma once

// Tyler's M-estimator of scatter and its regularized (shrinkage) variant.
//
// Given unit directions x_1..x_n in R^p, plain TME solves
//
//   S = (p/n) sum_i x_i x_i^T / (x_i^T S^{-1} x_i)
//
// (unique up to scale; iterates are pinned to trace(S) = p), and RTME solves
//
//   S = (1 - alpha) (p/n) sum_i x_i x_i^T / (x_i^T S^{-1} x_i) + alpha T
//
// for a positive-definite target T, which has a unique solution for
// alpha in (max(0, 1 - n/p), 1]. Both are found by fixed-point iteration.
// S^{-1} is never formed: each iterate is Cholesky-factored once and the
// quadratic forms come from triangular solves.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rtme/errors.hpp"
#include "rtme/samples.hpp"
#include "rtme/scatter_matrix.hpp"

namespace rtme {

inline constexpr double kWeightFloor = 1e-12;

struct FitConfig {
  double alpha = 0.0;
  std::optional<ScatterMatrix> target;  // identity when unset
  double tol = 1e-9;                    // on |S_{t+1} - S_t|_F
  int max_iter = 5000;
  std::optional<ScatterMatrix> init;    // identity when unset

  ScatterMatrix target_or_identity(Index p) const {
    return target ? *target : ScatterMatrix::identity(p);
  }
};

struct FitReport {
  ScatterMatrix estimate;
  int iterations = 0;
  double final_step = 0.0;
  double fixed_point_residual = 0.0;
  std::int64_t wall_time_ns = 0;
  std::vector<double> step_history;
  std::vector<std::string> warnings;
};

// Counts RFPI invocations. Shared across threads by the selectors.
class RfpiCounter {
 public:
  void increment() { count_.fetch_add(1, std::memory_order_relaxed); }
  std::int64_t value() const { return count_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::int64_t> count_{0};
};

// Smallest admissible shrinkage is strictly above this.
inline double alpha_lower_bound(Index n, Index p) {
  return std::max(0.0, 1.0 - static_cast<double>(n) / static_cast<double>(p));
}

namespace detail {

inline void require_same_dim(const UnitSampleSet& x, const ScatterMatrix& s, const char* what) {
  if (x.dim() != s.dim()) {
    throw DimensionError(std::string(what) + ": samples have dimension " + std::to_string(x.dim()) +
                         " but matrix is " + std::to_string(s.dim()) + "x" +
                         std::to_string(s.dim()));
  }
}

// x_i^T S^{-1} x_i for every column, without flooring.
inline Eigen::VectorXd quadratic_forms(const Eigen::MatrixXd& x, const ScatterMatrix& s) {
  const Eigen::MatrixXd y = s.whiten(x);
  Eigen::VectorXd q(x.cols());
  for (Index i = 0; i < x.cols(); ++i) q(i) = squared_norm(column_span(y, i));
  return q;
}

// sum_i x_i x_i^T / w_i, exactly symmetric.
inline Eigen::MatrixXd weighted_outer_sum(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd scaled = x * w.cwiseSqrt().cwiseInverse().asDiagonal();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  sum.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  sum.triangularView<Eigen::StrictlyUpper>() = sum.transpose();
  return sum;
}

// Weights floored at kWeightFloor; returns how many were clamped.
inline Index floor_weights(Eigen::VectorXd& w) {
  Index clamped = 0;
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) < kWeightFloor) {
      w(i) = kWeightFloor;
      ++clamped;
    }
  }
  return clamped;
}

// Right-hand side of the (regularized) fixed-point equation at s.
inline Eigen::MatrixXd fixed_point_map(const UnitSampleSet& x, const ScatterMatrix& s, double alpha,
                                       const ScatterMatrix& target, Index* clamped = nullptr) {
  Eigen::VectorXd w = quadratic_forms(x.columns(), s);
  const Index c = floor_weights(w);
  if (clamped) *clamped += c;
  const double coeff =
      (1.0 - alpha) * static_cast<double>(x.dim()) / static_cast<double>(x.size());
  Eigen::MatrixXd rhs = coeff * weighted_outer_sum(x.columns(), w);
  if (alpha > 0.0) rhs += alpha * target.entries();
  return symmetrized(rhs);
}

inline Eigen::MatrixXd with_trace(const Eigen::MatrixXd& m, double trace) {
  return m * (trace / m.trace());
}

inline FitReport iterate(const UnitSampleSet& x, const FitConfig& cfg, const ScatterMatrix& target,
                         bool pin_trace) {
  const auto start = std::chrono::steady_clock::now();
  const Index p = x.dim();
  if (!(cfg.tol > 0.0)) throw DomainError("tol must be positive");
  if (cfg.max_iter < 1) throw DomainError("max_iter must be positive");
  if (cfg.init && cfg.init->dim() != p) throw DimensionError("init matrix is not p x p");

  ScatterMatrix current = cfg.init ? *cfg.init : ScatterMatrix::identity(p);
  if (pin_trace) current = ScatterMatrix(with_trace(current.entries(), static_cast<double>(p)));

  std::vector<double> steps;
  Index clamped = 0;
  bool converged = false;
  for (int t = 0; t < cfg.max_iter; ++t) {
    Eigen::MatrixXd next = fixed_point_map(x, current, cfg.alpha, target, &clamped);
    if (pin_trace) next = with_trace(next, static_cast<double>(p));
    const double step = (next - current.entries()).norm();
    steps.push_back(step);
    try {
      current = ScatterMatrix(std::move(next));
    } catch (const NotPositiveDefinite&) {
      throw NotPositiveDefinite("fixed-point iterate " + std::to_string(t + 1) +
                                " lost positive definiteness");
    }
    if (step < cfg.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError("fixed-point iteration did not reach tol " + detail::format_double(cfg.tol) +
                               " within " + std::to_string(cfg.max_iter) + " iterations",
                           current.entries(), static_cast<int>(steps.size()), steps.back());
  }

  Eigen::MatrixXd rhs = fixed_point_map(x, current, cfg.alpha, target);
  if (pin_trace) rhs = with_trace(rhs, current.trace());
  const int iterations = static_cast<int>(steps.size());
  const double final_step = steps.back();
  FitReport report{current, iterations, final_step, (current.entries() - rhs).norm(), 0, std::move(steps), {}};
  if (clamped > 0) {
    report.warnings.push_back("ill-conditioned iterate: " + std::to_string(clamped) +
                              " weight(s) clamped to 1e-12");
  }
  report.wall_time_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  return report;
}

}  // namespace detail

// w_i = x_i^T S^{-1} x_i.
inline Eigen::VectorXd weights(const UnitSampleSet& x, const ScatterMatrix& s) {
  detail::require_same_dim(x, s, "weights");
  return detail::quadratic_forms(x.columns(), s);
}

// ACG negative log-likelihood without its additive constant:
//   (p/2) sum_i log(x_i^T S^{-1} x_i) + (n/2) log det S.
// The quadratic form is taken relative to |x_i|^2 (equal to 1 on a unit
// sample set) so that S = I gives exactly zero.
inline double acg_nll(const UnitSampleSet& x, const ScatterMatrix& s) {
  detail::require_same_dim(x, s, "acg_nll");
  const Eigen::MatrixXd y = s.whiten(x.columns());
  double log_sum = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    log_sum += std::log(detail::squared_norm(detail::column_span(y, i)) /
                        detail::squared_norm(detail::column_span(x.columns(), i)));
  }
  return 0.5 * static_cast<double>(x.dim()) * log_sum +
         0.5 * static_cast<double>(x.size()) * s.log_det();
}

// Single-observation loss: acg_nll with n = 1.
inline double acg_point_loss(const Eigen::VectorXd& x, const ScatterMatrix& s) {
  if (x.size() != s.dim()) throw DimensionError("acg_point_loss: dimension mismatch");
  const std::span<const double> xs{x.data(), static_cast<std::size_t>(x.size())};
  Eigen::VectorXd y = s.whiten(x);
  const double q = detail::squared_norm({y.data(), static_cast<std::size_t>(y.size())}) /
                   detail::squared_norm(xs);
  return 0.5 * static_cast<double>(x.size()) * std::log(q) + 0.5 * s.log_det();
}

// |S - RHS(S)|_F for the regularized fixed-point equation; alpha = 0 uses the
// plain equation with its RHS rescaled to trace(S).
inline double fixed_point_residual(const UnitSampleSet& x, const ScatterMatrix& s, double alpha,
                                   const ScatterMatrix& target) {
  detail::require_same_dim(x, s, "fixed_point_residual");
  detail::require_same_dim(x, target, "fixed_point_residual");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
  Eigen::MatrixXd rhs = detail::fixed_point_map(x, s, alpha, target);
  if (alpha == 0.0) rhs = detail::with_trace(rhs, s.trace());
  return (s.entries() - rhs).norm();
}

// Plain Tyler's M-estimator (cfg.alpha must be 0). Needs n > p; the
// almost-sure convergence guarantee needs n > p + 1 and a warning is
// attached otherwise. The estimate has trace p.
inline FitReport tme_fit(const UnitSampleSet& x, const FitConfig& cfg = {}) {
  if (cfg.alpha != 0.0) throw DomainError("tme_fit requires alpha = 0; use rtme_fit");
  if (x.size() <= x.dim()) {
    throw DomainError("TME is not defined for n <= p (n = " + std::to_string(x.size()) +
                      ", p = " + std::to_string(x.dim()) + "); use rtme_fit");
  }
  const ScatterMatrix identity = ScatterMatrix::identity(x.dim());
  FitReport report = detail::iterate(x, cfg, identity, true);
  if (x.size() <= x.dim() + 1) {
    report.warnings.push_back("n <= p + 1: convergence of the fixed-point iteration is not guaranteed");
  }
  return report;
}

// Regularized Tyler's M-estimator, alpha in (0, 1]; alpha must exceed
// 1 - n/p when p >= n. No trace pinning: alpha T fixes the scale.
inline FitReport rtme_fit(const UnitSampleSet& x, const FitConfig& cfg,
                          RfpiCounter* counter = nullptr) {
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) {
    throw DomainError("rtme_fit requires alpha in (0, 1], got " + detail::format_double(cfg.alpha));
  }
  const double bound = alpha_lower_bound(x.size(), x.dim());
  if (!(cfg.alpha > bound)) {
    throw DomainError("alpha = " + detail::format_double(cfg.alpha) +
                      " is not strictly greater than 1 - n/p = " + detail::format_double(bound));
  }
  const ScatterMatrix target = cfg.target_or_identity(x.dim());
  detail::require_same_dim(x, target, "rtme_fit target");
  if (counter) counter->increment();
  return detail::iterate(x, cfg, target, false);
}

}  // namespace rtme
