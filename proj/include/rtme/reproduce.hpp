#pragma once

// Experiment recipes over the 3 x 3 setting matrix: n in {2p, p, p/2}
// (p=50 gives n = 100, 50, 25) crossed with Toeplitz gamma in {0.1, 0.5, 0.85}.
//
//   curves  - paired exact/approximate CVL curves per setting
//   nmse    - NMSE-vs-alpha sweep with the ACVL choice marked
//   speedup - exact vs approximate selector wall time per setting
//
// Each recipe writes per-setting files, summary.json and checks.txt into the
// output directory. A failing setting is recorded and the rest still run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "rtme/cvl.hpp"
#include "rtme/elliptical.hpp"
#include "rtme/io.hpp"
#include "rtme/manifest.hpp"
#include "rtme/metrics.hpp"

namespace rtme {

enum class Recipe { curves, nmse, speedup };

inline Recipe parse_recipe(std::string_view text) {
  if (text == "curves") return Recipe::curves;
  if (text == "nmse") return Recipe::nmse;
  if (text == "speedup") return Recipe::speedup;
  throw DomainError("unknown recipe '" + std::string(text) + "'");
}

inline std::string to_string(Recipe recipe) {
  switch (recipe) {
    case Recipe::curves: return "curves";
    case Recipe::nmse: return "nmse";
    case Recipe::speedup: return "speedup";
  }
  return "?";
}

// Pass/fail thresholds shared with the acceptance suite.
namespace thresholds {
inline constexpr double kCurveRelativeGap = 0.05;  // sup |exact - approx| / exact range
inline constexpr std::size_t kArgminGridSteps = 1;
inline constexpr double kNmseRatio = 1.2;          // ACVL nmse / grid-minimum nmse
inline constexpr double kSpeedup = 10.0;           // at n = 2p, m = 20
}  // namespace thresholds

struct ReproduceOptions {
  Recipe recipe = Recipe::curves;
  std::string out_dir = "reproduce";
  Index p = 50;
  std::vector<double> gammas = {0.1, 0.5, 0.85};
  RadialLaw radial = RadialLaw::cauchy();
  std::uint64_t seed = 1;
  int grid_points = 20;
  int threads = 1;
  FitConfig fit;
};

struct ReproduceCheck {
  std::string setting;
  std::string criterion;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct ReproduceResult {
  std::vector<std::string> artifacts;
  std::vector<ReproduceCheck> checks;
  std::vector<std::string> failures;

  bool all_passed() const {
    return failures.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }
};

// Paired-curve agreement: sup |exact - approx| over the grid divided by the
// exact curve's range.
inline double relative_curve_gap(const CvlCurve& exact, const CvlCurve& approx) {
  double lo = exact.points.front().loss;
  double hi = lo;
  double gap = 0.0;
  for (std::size_t j = 0; j < exact.points.size(); ++j) {
    lo = std::min(lo, exact.points[j].loss);
    hi = std::max(hi, exact.points[j].loss);
    gap = std::max(gap, std::abs(exact.points[j].loss - approx.points[j].loss));
  }
  return gap / (hi - lo);
}

inline std::size_t argmin_index_distance(const CvlCurve& a, const CvlCurve& b) {
  const auto ia = a.argmin_index();
  const auto ib = b.argmin_index();
  return ia > ib ? ia - ib : ib - ia;
}

inline std::vector<Index> reproduce_sample_sizes(Index p) { return {2 * p, p, p / 2}; }

inline ReproduceResult reproduce(const ReproduceOptions& opts, const json& parameters) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  if (ec) throw IoError("cannot create '" + opts.out_dir + "': " + ec.message());

  ReproduceResult result;
  json settings = json::array();
  const RunManifest manifest("reproduce", parameters, opts.seed);

  for (Index n : reproduce_sample_sizes(opts.p)) {
    for (double gamma : opts.gammas) {
      const std::string tag = "p" + std::to_string(opts.p) + "_n" + std::to_string(n) + "_g" +
                              detail::format_double(gamma);
      const EllipticalSpec spec{opts.p, n, toeplitz_scatter(opts.p, gamma), opts.radial, opts.seed};
      json entry = {{"setting", tag}, {"p", opts.p}, {"n", n}, {"gamma", gamma}};
      try {
        switch (opts.recipe) {
          case Recipe::curves: {
            const UnitSampleSet x = normalize_samples(sample_elliptical(spec)).samples;
            const AlphaGrid grid = AlphaGrid::for_leave_one_out(n, opts.p, opts.grid_points);
            const CvlCurve exact = select_alpha_grid(x, grid, opts.fit, CvlMethod::exact, opts.threads);
            const CvlCurve approx =
                select_alpha_grid(x, grid, opts.fit, CvlMethod::approximate, opts.threads);
            const std::string path = (fs::path(opts.out_dir) / ("curves_" + tag + ".csv")).string();
            write_text_file(path, paired_curve_csv(exact, approx));
            result.artifacts.push_back(path);
            const double gap = relative_curve_gap(exact, approx);
            const auto steps = argmin_index_distance(exact, approx);
            entry["relative_gap"] = gap;
            entry["argmin_exact"] = exact.argmin_alpha;
            entry["argmin_approx"] = approx.argmin_alpha;
            result.checks.push_back({tag, "relative_gap<0.05", gap, thresholds::kCurveRelativeGap,
                                     gap < thresholds::kCurveRelativeGap});
            result.checks.push_back({tag, "argmin_grid_steps<=1", static_cast<double>(steps),
                                     static_cast<double>(thresholds::kArgminGridSteps),
                                     steps <= thresholds::kArgminGridSteps});
            break;
          }
          case Recipe::nmse: {
            const AlphaGrid grid = AlphaGrid::for_full_fit(n, opts.p, opts.grid_points);
            const NmseSweep sweep = nmse_sweep(spec, grid, opts.fit, opts.threads);
            const std::string path = (fs::path(opts.out_dir) / ("nmse_" + tag + ".csv")).string();
            write_text_file(path, nmse_sweep_csv(sweep));
            result.artifacts.push_back(path);
            const double ratio = sweep.selected.front().nmse / sweep.oracle_nmse;
            entry["oracle_alpha"] = sweep.oracle_alpha;
            entry["acvl_alpha"] = sweep.selected.front().alpha;
            entry["nmse_ratio"] = ratio;
            result.checks.push_back({tag, "acvl_nmse_ratio<=1.2", ratio, thresholds::kNmseRatio,
                                     ratio <= thresholds::kNmseRatio});
            break;
          }
          case Recipe::speedup: {
            const AlphaGrid grid = AlphaGrid::for_leave_one_out(n, opts.p, opts.grid_points);
            BenchReport report = bench_exact_vs_approx(spec, grid, opts.fit, opts.threads);
            report.setting.gamma = gamma;
            json doc = to_json(report);
            doc["manifest"] = manifest.finish();
            const std::string path = (fs::path(opts.out_dir) / ("bench_" + tag + ".json")).string();
            write_text_file(path, doc.dump(2) + "\n");
            result.artifacts.push_back(path);
            entry["speedup"] = report.speedup;
            if (n == 2 * opts.p && opts.grid_points == 20) {
              result.checks.push_back({tag, "speedup>=10", report.speedup, thresholds::kSpeedup,
                                       report.speedup >= thresholds::kSpeedup});
            }
            break;
          }
        }
      } catch (const Error& e) {
        result.failures.push_back(tag + ": " + e.what());
        entry["error"] = e.what();
      }
      settings.push_back(std::move(entry));
    }
  }

  json checks = json::array();
  std::string check_lines;
  for (const auto& c : result.checks) {
    checks.push_back({{"setting", c.setting},
                      {"criterion", c.criterion},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"pass", c.pass}});
    check_lines += std::string(c.pass ? "PASS " : "FAIL ") + c.setting + ' ' + c.criterion + ' ' +
                   detail::format_double(c.value) + '\n';
  }
  for (const auto& f : result.failures) check_lines += "ERROR " + f + '\n';

  const json summary = {{"recipe", to_string(opts.recipe)},
                        {"settings", std::move(settings)},
                        {"checks", std::move(checks)},
                        {"failures", result.failures},
                        {"all_passed", result.all_passed()},
                        {"manifest", manifest.finish()}};
  const std::string summary_path = (fs::path(opts.out_dir) / "summary.json").string();
  const std::string checks_path = (fs::path(opts.out_dir) / "checks.txt").string();
  write_text_file(summary_path, summary.dump(2) + "\n");
  write_text_file(checks_path, check_lines);
  result.artifacts.push_back(summary_path);
  result.artifacts.push_back(checks_path);
  return result;
}

}  // namespace rtme
