#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "rtme/errors.hpp"
#include "rtme/scatter_matrix.hpp"

namespace rtme {

struct SampleOrigin {
  enum class Kind { synthetic, file };
  Kind kind = Kind::synthetic;
  std::uint64_t seed = 0;  // synthetic
  std::string path;        // file

  static SampleOrigin synthetic(std::uint64_t seed) { return {Kind::synthetic, seed, {}}; }
  static SampleOrigin file(std::string path) { return {Kind::file, 0, std::move(path)}; }
};

// Synthetic rows are generated as z_i = u_i * d_i. Keeping the factors lets
// normalization divide d_i by its own norm, so the radial scalars cancel
// exactly instead of up to rounding.
struct PolarForm {
  Eigen::MatrixXd directions;  // n x p, the d_i = L y_i
  Eigen::VectorXd radii;       // n, u_i >= 0
};

// n observations of dimension p, one per row, arbitrary norms.
struct RawSampleSet {
  Eigen::MatrixXd rows;  // n x p
  SampleOrigin origin;
  std::optional<PolarForm> polar;

  Index size() const { return rows.rows(); }
  Index dim() const { return rows.cols(); }
};

// n unit-norm directions x_i in R^p, stored as the columns of a p x n matrix.
class UnitSampleSet {
 public:
  UnitSampleSet() = default;

  // Validates |x_i| = 1 within 1e-12 for every column.
  explicit UnitSampleSet(Eigen::MatrixXd columns) : x_(std::move(columns)) {
    if (x_.cols() == 0 || x_.rows() == 0) throw EmptyInput("unit sample set is empty");
    if (!x_.allFinite()) throw DomainError("unit sample set has non-finite entries");
    for (Index i = 0; i < x_.cols(); ++i) {
      const double norm = std::sqrt(detail::squared_norm(detail::column_span(x_, i)));
      if (std::abs(norm - 1.0) > 1e-12) {
        throw DomainError("sample " + std::to_string(i) + " is not unit norm");
      }
    }
  }

  Index size() const { return x_.cols(); }
  Index dim() const { return x_.rows(); }
  const Eigen::MatrixXd& columns() const { return x_; }
  auto operator[](Index i) const { return x_.col(i); }

  UnitSampleSet without(Index i) const {
    Eigen::MatrixXd rest(dim(), size() - 1);
    rest.leftCols(i) = x_.leftCols(i);
    rest.rightCols(size() - 1 - i) = x_.rightCols(size() - 1 - i);
    return UnitSampleSet(std::move(rest));
  }

  bool operator==(const UnitSampleSet& other) const {
    return x_.rows() == other.x_.rows() && x_.cols() == other.x_.cols() && x_ == other.x_;
  }

 private:
  Eigen::MatrixXd x_;
};

struct NormalizedSamples {
  UnitSampleSet samples;
  Index dropped_zero_rows = 0;
};

// x_i = z_i / |z_i|. Rows with norm below 1e-300 carry no direction and are
// dropped; the count is reported.
inline NormalizedSamples normalize_samples(const RawSampleSet& raw) {
  const Eigen::MatrixXd& source = raw.polar ? raw.polar->directions : raw.rows;
  if (raw.polar && (source.rows() != raw.rows.rows() || source.cols() != raw.rows.cols())) {
    throw DimensionError("polar form does not match the raw rows");
  }
  if (!raw.rows.allFinite()) throw DomainError("raw samples contain NaN or Inf");
  const Index n = source.rows();
  const Index p = source.cols();
  Eigen::MatrixXd kept(p, n);
  Index count = 0;
  Index dropped = 0;
  for (Index i = 0; i < n; ++i) {
    // A zero radius zeroes the row even if the direction is not.
    if (raw.polar && !(raw.polar->radii(i) > 0.0)) {
      ++dropped;
      continue;
    }
    Eigen::VectorXd row = source.row(i).transpose();
    const double norm = row.norm();
    if (!(norm >= 1e-300)) {
      ++dropped;
      continue;
    }
    kept.col(count++) = row / norm;
  }
  if (count == 0) throw EmptyInput("all samples are zero vectors");
  return {UnitSampleSet(kept.leftCols(count)), dropped};
}

}  // namespace rtme
