#pragma once

// Accuracy against a known population scatter, oracle-alpha sweeps, and the
// exact-vs-approximate CVL timing harness.

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rtme/cvl.hpp"
#include "rtme/elliptical.hpp"
#include "rtme/errors.hpp"
#include "rtme/tyler.hpp"

namespace rtme {

// |estimate - truth|_F^2 / |truth|_F^2, matrices compared as given.
inline double nmse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw DimensionError("nmse: dimension mismatch");
  }
  const double denom = truth.squaredNorm();
  if (!(denom > 0.0)) throw DomainError("nmse: truth has zero norm");
  return (estimate - truth).squaredNorm() / denom;
}

// Rescales a square matrix to trace = its dimension.
inline Eigen::MatrixXd trace_normalized(const Eigen::MatrixXd& m) {
  return m * (static_cast<double>(m.rows()) / m.trace());
}

struct NmsePoint {
  double alpha = 0.0;
  double nmse = 0.0;
};

struct SelectedAlpha {
  std::string label;
  double alpha = 0.0;
  double nmse = 0.0;
};

struct NmseSweep {
  std::vector<NmsePoint> points;
  double oracle_alpha = 0.0;  // grid argmin of nmse, ties to the smaller alpha
  double oracle_nmse = 0.0;
  std::vector<SelectedAlpha> selected;
};

// Fits RTME at every grid alpha on one draw from spec and scores each fit
// against spec.scatter. The ACVL choice over the same grid is attached as
// the "acvl" marker.
inline NmseSweep nmse_sweep(const EllipticalSpec& spec, const AlphaGrid& grid, const FitConfig& cfg,
                            int threads = 1) {
  grid.validate();
  const UnitSampleSet x = normalize_samples(sample_elliptical(spec)).samples;
  const Eigen::MatrixXd& truth = spec.scatter.entries();

  NmseSweep sweep;
  for (double alpha : grid.values) {
    FitConfig fit_cfg = cfg;
    fit_cfg.alpha = alpha;
    sweep.points.push_back({alpha, nmse(rtme_fit(x, fit_cfg).estimate.entries(), truth)});
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < sweep.points.size(); ++j) {
    if (sweep.points[j].nmse < sweep.points[best].nmse) best = j;
  }
  sweep.oracle_alpha = sweep.points[best].alpha;
  sweep.oracle_nmse = sweep.points[best].nmse;

  const CvlCurve acvl = select_alpha_grid(x, grid, cfg, CvlMethod::approximate, threads);
  sweep.selected.push_back({"acvl", acvl.argmin_alpha, sweep.points[acvl.argmin_index()].nmse});
  return sweep;
}

struct BenchSetting {
  Index p = 0;
  Index n = 0;
  std::optional<double> gamma;  // set when the scatter is Toeplitz
  std::string radial;
  std::uint64_t seed = 0;
  std::size_t m = 0;
};

struct BenchReport {
  BenchSetting setting;
  std::int64_t exact_time_ns = 0;
  std::int64_t approx_time_ns = 0;
  double speedup = 0.0;
  std::int64_t exact_calls = 0;
  std::int64_t approx_calls = 0;
  double argmin_exact = 0.0;
  double argmin_approx = 0.0;
  double grid_step = 0.0;
  CvlCurve exact_curve;
  CvlCurve approx_curve;
};

// Runs both selectors on one draw from spec over the same grid. Timing
// covers the selector calls only, after one untimed approximate warm-up.
inline BenchReport bench_exact_vs_approx(const EllipticalSpec& spec, const AlphaGrid& grid,
                                         const FitConfig& cfg, int threads = 1) {
  const UnitSampleSet x = normalize_samples(sample_elliptical(spec)).samples;

  (void)select_alpha_grid(x, grid, cfg, CvlMethod::approximate, threads);

  using clock = std::chrono::steady_clock;
  auto elapsed = [](clock::time_point from) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - from).count();
  };

  BenchReport report;
  report.setting = {spec.dimension, spec.sample_count, std::nullopt, spec.radial.to_string(),
                    spec.seed, grid.size()};
  RfpiCounter exact_counter;
  RfpiCounter approx_counter;

  auto start = clock::now();
  report.exact_curve = select_alpha_grid(x, grid, cfg, CvlMethod::exact, threads, &exact_counter);
  report.exact_time_ns = elapsed(start);

  start = clock::now();
  report.approx_curve =
      select_alpha_grid(x, grid, cfg, CvlMethod::approximate, threads, &approx_counter);
  report.approx_time_ns = elapsed(start);

  report.exact_calls = exact_counter.value();
  report.approx_calls = approx_counter.value();
  if (report.approx_calls * x.size() != report.exact_calls) {
    throw std::logic_error("RFPI call-count law violated: exact " +
                           std::to_string(report.exact_calls) + ", approx " +
                           std::to_string(report.approx_calls) + ", n " +
                           std::to_string(x.size()));
  }
  report.speedup = static_cast<double>(report.exact_time_ns) /
                   static_cast<double>(std::max<std::int64_t>(report.approx_time_ns, 1));
  report.argmin_exact = report.exact_curve.argmin_alpha;
  report.argmin_approx = report.approx_curve.argmin_alpha;
  report.grid_step = grid.max_step();
  return report;
}

}  // namespace rtme
