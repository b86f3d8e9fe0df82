#pragma once

// CSV sample exchange and JSON renderings of the report types. Field names
// here are the documented wire format (see FORMATS.md).

#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "rtme/cvl.hpp"
#include "rtme/errors.hpp"
#include "rtme/metrics.hpp"
#include "rtme/samples.hpp"
#include "rtme/tyler.hpp"

namespace rtme {

using json = nlohmann::json;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

// Parses a rectangular numeric CSV (no quoting) into an n x p matrix. Blank
// lines are ignored; header skips the first line.
inline Eigen::MatrixXd parse_csv_matrix(std::string_view text, bool header = false) {
  std::vector<std::vector<double>> rows;
  std::size_t expected = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (header && line_no == 1) continue;
    if (detail::trim(line).empty()) continue;

    std::vector<double> row;
    std::size_t start = 0;
    for (std::size_t col = 1;; ++col) {
      const auto comma = line.find(',', start);
      const std::string_view cell = detail::trim(
          line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
          !std::isfinite(value)) {
        throw ParseError(ParseError::Kind::non_numeric,
                         "row " + std::to_string(line_no) + ", column " + std::to_string(col) +
                             ": not a finite number: '" + std::string(cell) + "'",
                         line_no, col);
      }
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows.empty()) {
      expected = row.size();
    } else if (row.size() != expected) {
      throw ParseError(ParseError::Kind::ragged_row,
                       "row " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                           " columns, expected " + std::to_string(expected),
                       line_no, std::min(row.size(), expected) + 1);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(ParseError::Kind::empty_file, "CSV input has no data rows", 0, 0);

  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(expected));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < expected; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return m;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write to '" + path + "' failed");
}

// Loads n x p samples; with center, subtracts each column's mean.
inline RawSampleSet load_csv_samples(const std::string& path, bool center, bool header = false) {
  RawSampleSet raw;
  raw.rows = parse_csv_matrix(read_text_file(path), header);
  if (center) raw.rows.rowwise() -= raw.rows.colwise().mean();
  raw.origin = SampleOrigin::file(path);
  return raw;
}

// No header, shortest round-trip decimals.
inline std::string format_csv_matrix(const Eigen::MatrixXd& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += detail::format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline void write_csv_samples(const std::string& path, const RawSampleSet& samples) {
  write_text_file(path, format_csv_matrix(samples.rows));
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const FitReport& report) {
  return {{"estimate", matrix_to_json(report.estimate.entries())},
          {"iterations", report.iterations},
          {"final_step", report.final_step},
          {"fixed_point_residual", report.fixed_point_residual},
          {"wall_time_ns", report.wall_time_ns},
          {"warnings", report.warnings}};
}

inline json to_json(const CvlPoint& pt) {
  return {{"alpha", pt.alpha},
          {"loss", pt.loss},
          {"rfpi_calls", pt.rfpi_calls},
          {"wall_time_ns", pt.wall_time_ns}};
}

inline json to_json(const CvlCurve& curve) {
  json points = json::array();
  for (const auto& pt : curve.points) points.push_back(to_json(pt));
  return {{"method", to_string(curve.method)},
          {"points", std::move(points)},
          {"argmin_alpha", curve.argmin_alpha},
          {"argmin_loss", curve.argmin_loss},
          {"total_rfpi_calls", curve.total_rfpi_calls()},
          {"total_wall_time_ns", curve.total_wall_time_ns()}};
}

inline json to_json(const BisectionResult& result) {
  json points = json::array();
  std::int64_t wall = 0;
  for (const auto& pt : result.evaluations) {
    points.push_back(to_json(pt));
    wall += pt.wall_time_ns;
  }
  return {{"method", "approx-bisection"},
          {"points", std::move(points)},
          {"argmin_alpha", result.alpha},
          {"argmin_loss", result.loss},
          {"iterations", result.iterations},
          {"fallback", result.fallback},
          {"total_rfpi_calls", result.rfpi_calls},
          {"total_wall_time_ns", wall}};
}

inline json to_json(const NmseSweep& sweep) {
  json points = json::array();
  for (const auto& pt : sweep.points) points.push_back({{"alpha", pt.alpha}, {"nmse", pt.nmse}});
  json selected = json::array();
  for (const auto& s : sweep.selected) {
    selected.push_back({{"label", s.label}, {"alpha", s.alpha}, {"nmse", s.nmse}});
  }
  return {{"points", std::move(points)},
          {"oracle_alpha", sweep.oracle_alpha},
          {"oracle_nmse", sweep.oracle_nmse},
          {"selected", std::move(selected)}};
}

// alpha,nmse,is_acvl
inline std::string nmse_sweep_csv(const NmseSweep& sweep) {
  double marker = -1.0;
  for (const auto& s : sweep.selected) {
    if (s.label == "acvl") marker = s.alpha;
  }
  std::string out = "alpha,nmse,is_acvl\n";
  for (const auto& pt : sweep.points) {
    out += detail::format_double(pt.alpha) + ',' + detail::format_double(pt.nmse) + ',' +
           (pt.alpha == marker ? "1" : "0") + '\n';
  }
  return out;
}

// alpha,exact_loss,approx_loss; the two curves must share a grid.
inline std::string paired_curve_csv(const CvlCurve& exact, const CvlCurve& approx) {
  if (exact.points.size() != approx.points.size()) {
    throw DimensionError("paired curves have different grids");
  }
  std::string out = "alpha,exact_loss,approx_loss\n";
  for (std::size_t j = 0; j < exact.points.size(); ++j) {
    out += detail::format_double(exact.points[j].alpha) + ',' +
           detail::format_double(exact.points[j].loss) + ',' +
           detail::format_double(approx.points[j].loss) + '\n';
  }
  return out;
}

inline json to_json(const BenchReport& report) {
  json setting = {{"p", report.setting.p},
                  {"n", report.setting.n},
                  {"radial", report.setting.radial},
                  {"seed", report.setting.seed},
                  {"m", report.setting.m}};
  setting["gamma"] = report.setting.gamma ? json(*report.setting.gamma) : json(nullptr);
  return {{"setting", std::move(setting)},
          {"exact_time_ns", report.exact_time_ns},
          {"approx_time_ns", report.approx_time_ns},
          {"speedup", report.speedup},
          {"exact_calls", report.exact_calls},
          {"approx_calls", report.approx_calls},
          {"argmin_exact", report.argmin_exact},
          {"argmin_approx", report.argmin_approx},
          {"grid_step", report.grid_step}};
}

}  // namespace rtme
