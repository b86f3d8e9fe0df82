#pragma once

// Selection of the shrinkage coefficient by leave-one-out cross-validated
// ACG likelihood (CVL).
//
// Exact CVL refits the regularized estimator on each X \ {x_i}, which costs
// n RFPI runs per alpha. The approximate CVL runs RFPI once on all n samples
// and, for each held-out i, rebuilds
//
//   S~_i = (1 - alpha) p/(n-1) sum_{j != i} x_j x_j^T / v_j + alpha T,
//   v_j  = x_j^T S(alpha; X)^{-1} x_j,
//
// i.e. one reweighting step with the full-data weights, no iteration.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "rtme/errors.hpp"
#include "rtme/samples.hpp"
#include "rtme/scatter_matrix.hpp"
#include "rtme/tyler.hpp"

namespace rtme {

enum class CvlMethod { exact, approximate };

inline std::string to_string(CvlMethod method) {
  return method == CvlMethod::exact ? "exact" : "approx";
}

// Lowest admissible alpha for a leave-one-out fit on n - 1 samples.
inline double leave_one_out_lower_bound(Index n, Index p) { return alpha_lower_bound(n - 1, p); }

struct AlphaGrid {
  std::vector<double> values;  // strictly increasing, inside (lower_bound, 1)
  double lower_bound = 0.0;

  // m equally spaced points from lower_bound + delta to 1 - delta.
  static AlphaGrid uniform(double lower_bound, int m, double delta = 1e-3) {
    if (m < 2) throw DomainError("alpha grid needs at least 2 points");
    const double lo = lower_bound + delta;
    const double hi = 1.0 - delta;
    if (!(lo < hi)) throw DomainError("alpha grid interval is empty");
    AlphaGrid grid;
    grid.lower_bound = lower_bound;
    grid.values.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) grid.values[j] = lo + (hi - lo) * j / (m - 1);
    grid.validate();
    return grid;
  }

  // m points lower_bound + (1 - lower_bound) j/(m + 1), j = 1..m. Keeps the
  // first point a full spacing away from the bound, where RFPI slows down.
  static AlphaGrid interior(double lower_bound, int m) {
    if (m < 2) throw DomainError("alpha grid needs at least 2 points");
    AlphaGrid grid;
    grid.lower_bound = lower_bound;
    grid.values.resize(static_cast<std::size_t>(m));
    for (int j = 1; j <= m; ++j) grid.values[j - 1] = lower_bound + (1.0 - lower_bound) * j / (m + 1);
    grid.validate();
    return grid;
  }

  // Grid admissible for fitting all n samples.
  static AlphaGrid for_full_fit(Index n, Index p, int m) {
    return interior(alpha_lower_bound(n, p), m);
  }

  // Grid admissible for every leave-one-out fit, hence for both methods.
  static AlphaGrid for_leave_one_out(Index n, Index p, int m) {
    return interior(leave_one_out_lower_bound(n, p), m);
  }

  void validate() const {
    if (values.empty()) throw DomainError("alpha grid is empty");
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (!(values[j] > lower_bound && values[j] < 1.0)) {
        throw DomainError("alpha grid value " + detail::format_double(values[j]) + " outside (" +
                          detail::format_double(lower_bound) + ", 1)");
      }
      if (j > 0 && !(values[j] > values[j - 1])) {
        throw DomainError("alpha grid must be strictly increasing");
      }
    }
  }

  std::size_t size() const { return values.size(); }

  // Largest gap between neighbours.
  double max_step() const {
    double step = 0.0;
    for (std::size_t j = 1; j < values.size(); ++j) step = std::max(step, values[j] - values[j - 1]);
    return step;
  }
};

struct CvlValue {
  double loss = 0.0;
  std::int64_t rfpi_calls = 0;
};

struct CvlPoint {
  double alpha = 0.0;
  double loss = 0.0;
  std::int64_t rfpi_calls = 0;
  std::int64_t wall_time_ns = 0;
};

struct CvlCurve {
  CvlMethod method = CvlMethod::approximate;
  std::vector<CvlPoint> points;
  double argmin_alpha = 0.0;
  double argmin_loss = 0.0;

  std::int64_t total_rfpi_calls() const {
    std::int64_t total = 0;
    for (const auto& pt : points) total += pt.rfpi_calls;
    return total;
  }
  std::int64_t total_wall_time_ns() const {
    std::int64_t total = 0;
    for (const auto& pt : points) total += pt.wall_time_ns;
    return total;
  }
  std::size_t argmin_index() const {
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (points[j].alpha == argmin_alpha) return j;
    }
    return 0;
  }
};

namespace detail {

inline FitConfig with_alpha(const FitConfig& cfg, double alpha) {
  FitConfig out = cfg;
  out.alpha = alpha;
  return out;
}

// Index of the smallest loss; equal losses go to the smaller alpha.
inline std::size_t argmin_smallest_alpha(const std::vector<CvlPoint>& points) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < points.size(); ++j) {
    const auto& a = points[j];
    const auto& b = points[best];
    if (a.loss < b.loss || (a.loss == b.loss && a.alpha < b.alpha)) best = j;
  }
  return best;
}

inline void require_cvl_sample_count(const UnitSampleSet& x) {
  if (x.size() < 2) throw DomainError("cross-validation needs at least 2 samples");
}

}  // namespace detail

// Exact leave-one-out CVL at one alpha: n RFPI fits, each on X \ {x_i}
// started from cfg.init, scored by the single-point ACG loss at x_i.
inline CvlValue exact_cvl(const UnitSampleSet& x, double alpha, const FitConfig& cfg,
                          RfpiCounter* counter = nullptr) {
  detail::require_cvl_sample_count(x);
  const double bound = leave_one_out_lower_bound(x.size(), x.dim());
  if (!(alpha > bound && alpha <= 1.0)) {
    throw DomainError("exact CVL needs alpha in (" + detail::format_double(bound) + ", 1], got " +
                      detail::format_double(alpha));
  }
  const FitConfig fit_cfg = detail::with_alpha(cfg, alpha);
  RfpiCounter local;
  double total = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const UnitSampleSet rest = x.without(i);
    try {
      const FitReport fit = rtme_fit(rest, fit_cfg, &local);
      total += acg_point_loss(x[i], fit.estimate);
    } catch (const Error& e) {
      throw LeaveOneOutError("leave-one-out fit without sample " + std::to_string(i) +
                                 " failed: " + e.what(),
                             static_cast<std::size_t>(i));
    }
  }
  if (counter) {
    for (std::int64_t k = 0; k < local.value(); ++k) counter->increment();
  }
  return {total / static_cast<double>(x.size()), local.value()};
}

// S~(alpha; X \ {x_i}) built from the full-data fit, summing over j != i.
inline ScatterMatrix approx_leave_one_out_scatter(const UnitSampleSet& x, Index i,
                                                  const ScatterMatrix& full_fit, double alpha,
                                                  const ScatterMatrix& target) {
  detail::require_cvl_sample_count(x);
  detail::require_same_dim(x, full_fit, "approx_leave_one_out_scatter");
  detail::require_same_dim(x, target, "approx_leave_one_out_scatter target");
  if (i < 0 || i >= x.size()) throw DomainError("held-out index out of range");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");

  const Eigen::VectorXd v = weights(x, full_fit);
  const Index n = x.size();
  Eigen::MatrixXd rest(x.dim(), n - 1);
  Eigen::VectorXd rest_v(n - 1);
  for (Index j = 0, k = 0; j < n; ++j) {
    if (j == i) continue;
    rest.col(k) = x[j];
    rest_v(k) = v(j);
    ++k;
  }
  const double coeff = (1.0 - alpha) * static_cast<double>(x.dim()) / static_cast<double>(n - 1);
  Eigen::MatrixXd s = coeff * detail::weighted_outer_sum(rest, rest_v) + alpha * target.entries();
  return ScatterMatrix(symmetrized(s));
}

// Approximate CVL at one alpha: one RFPI fit on all samples, then the n
// reweighted leave-one-out scatters. The shared weighted sum is formed once
// and each held-out term subtracted from it.
inline CvlValue approx_cvl(const UnitSampleSet& x, double alpha, const FitConfig& cfg,
                           RfpiCounter* counter = nullptr) {
  detail::require_cvl_sample_count(x);
  const FitConfig fit_cfg = detail::with_alpha(cfg, alpha);
  RfpiCounter local;
  const FitReport full = rtme_fit(x, fit_cfg, &local);
  if (counter) counter->increment();

  const ScatterMatrix target = cfg.target_or_identity(x.dim());
  const Index n = x.size();
  const Eigen::VectorXd v = weights(x, full.estimate);
  const Eigen::MatrixXd shared = detail::weighted_outer_sum(x.columns(), v);
  const double coeff = (1.0 - alpha) * static_cast<double>(x.dim()) / static_cast<double>(n - 1);
  const Eigen::MatrixXd shrink = alpha * target.entries();

  double total = 0.0;
  Eigen::MatrixXd s(x.dim(), x.dim());
  for (Index i = 0; i < n; ++i) {
    const auto xi = x[i];
    s = shared;
    s.noalias() -= (xi / v(i)) * xi.transpose();
    s = coeff * s + shrink;
    total += acg_point_loss(xi, ScatterMatrix(symmetrized(s)));
  }
  return {total / static_cast<double>(n), local.value()};
}

inline CvlValue evaluate_cvl(CvlMethod method, const UnitSampleSet& x, double alpha,
                             const FitConfig& cfg, RfpiCounter* counter = nullptr) {
  return method == CvlMethod::exact ? exact_cvl(x, alpha, cfg, counter)
                                    : approx_cvl(x, alpha, cfg, counter);
}

// Evaluates the chosen CVL at every grid point and returns the curve with
// its argmin (ties go to the smaller alpha). With threads > 1 grid points are
// spread over worker threads; results do not depend on the thread count.
inline CvlCurve select_alpha_grid(const UnitSampleSet& x, const AlphaGrid& grid,
                                  const FitConfig& cfg, CvlMethod method, int threads = 1,
                                  RfpiCounter* counter = nullptr) {
  grid.validate();
  const double bound = method == CvlMethod::exact ? leave_one_out_lower_bound(x.size(), x.dim())
                                                  : alpha_lower_bound(x.size(), x.dim());
  if (!(grid.values.front() > bound)) {
    throw DomainError(to_string(method) + " CVL grid must lie above " + detail::format_double(bound));
  }

  const std::size_t m = grid.size();
  CvlCurve curve;
  curve.method = method;
  curve.points.resize(m);
  std::vector<std::exception_ptr> failures(m);

  auto evaluate = [&](std::size_t j) {
    const double alpha = grid.values[j];
    const auto start = std::chrono::steady_clock::now();
    try {
      const CvlValue value = evaluate_cvl(method, x, alpha, cfg, counter);
      curve.points[j] = {alpha, value.loss, value.rfpi_calls,
                         std::chrono::duration_cast<std::chrono::nanoseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count()};
    } catch (const Error& e) {
      failures[j] = std::make_exception_ptr(
          SelectionError("alpha = " + detail::format_double(alpha) + ": " + e.what(), alpha));
    }
  };

  const int workers = std::clamp(threads, 1, static_cast<int>(m));
  if (workers == 1) {
    for (std::size_t j = 0; j < m; ++j) evaluate(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < m; j = next++) evaluate(j);
      });
    }
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  const std::size_t best = detail::argmin_smallest_alpha(curve.points);
  curve.argmin_alpha = curve.points[best].alpha;
  curve.argmin_loss = curve.points[best].loss;
  return curve;
}

struct BisectionResult {
  double alpha = 0.0;
  double loss = 0.0;
  int iterations = 0;  // bracket-halving steps; excludes any fallback pass
  bool fallback = false;
  std::int64_t rfpi_calls = 0;
  std::vector<CvlPoint> evaluations;  // every objective evaluation, in order
};

// Number of points in the coarse grid used when the sampled objective is not
// unimodal.
inline constexpr int kBisectionFallbackPoints = 20;

namespace detail {

// True when the values, ordered by alpha, fall and then rise (ties allowed).
inline bool looks_unimodal(std::vector<CvlPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.alpha < b.alpha; });
  bool rising = false;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double slack = 1e-12 * std::max(1.0, std::abs(pts[k - 1].loss));
    if (pts[k].loss > pts[k - 1].loss + slack) rising = true;
    if (rising && pts[k].loss < pts[k - 1].loss - slack) return false;
  }
  return true;
}

}  // namespace detail

// Minimizes approximate CVL over [lo, hi] by bisection on the sign of a
// central difference: each step compares the objective at mid -/+ eps/8 and
// keeps the half (plus eps/8) that must contain the minimum of a unimodal
// function. Stops once the bracket is narrower than eps, which takes at most
// ceil(log2((hi - lo)/eps)) + 1 steps. Only interior points are evaluated, so
// lo may equal the admissibility bound and hi may equal 1.
//
// If the evaluated points are not consistent with a unimodal curve, a
// kBisectionFallbackPoints-point grid over the bracket is evaluated instead
// and its argmin returned, with fallback = true.
inline BisectionResult select_alpha_bisection(const UnitSampleSet& x, double lo, double hi,
                                              double eps, const FitConfig& cfg) {
  detail::require_cvl_sample_count(x);
  if (!(eps > 0.0)) throw DomainError("bisection tolerance must be positive");
  if (!(lo < hi)) {
    throw DomainError("invalid bracket (" + detail::format_double(lo) + ", " + detail::format_double(hi) + ")");
  }
  const double bound = alpha_lower_bound(x.size(), x.dim());
  if (lo < bound || hi > 1.0) {
    throw DomainError("bracket must lie within [" + detail::format_double(bound) + ", 1]");
  }

  BisectionResult result;
  RfpiCounter counter;
  auto objective = [&](double alpha) {
    const auto start = std::chrono::steady_clock::now();
    const CvlValue value = approx_cvl(x, alpha, cfg, &counter);
    result.evaluations.push_back(
        {alpha, value.loss, value.rfpi_calls,
         std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                              start)
             .count()});
    return value.loss;
  };

  const double half_gap = eps / 8.0;
  double a = lo;
  double b = hi;
  while (b - a >= eps) {
    const double mid = 0.5 * (a + b);
    if (objective(mid - half_gap) <= objective(mid + half_gap)) {
      b = mid + half_gap;
    } else {
      a = mid - half_gap;
    }
    ++result.iterations;
  }
  result.alpha = 0.5 * (a + b);
  result.loss = objective(result.alpha);

  if (!detail::looks_unimodal(result.evaluations)) {
    result.fallback = true;
    const double width = hi - lo;
    for (int k = 0; k < kBisectionFallbackPoints; ++k) {
      const double alpha = lo + width * (k + 0.5) / kBisectionFallbackPoints;
      const double loss = objective(alpha);
      if (loss < result.loss || (loss == result.loss && alpha < result.alpha)) {
        result.alpha = alpha;
        result.loss = loss;
      }
    }
  }
  result.rfpi_calls = counter.value();
  return result;
}

}  // namespace rtme
