#pragma once

// Synthetic data from the zero-mean elliptical model z = u * S^{1/2} y, with
// y uniform on the unit sphere and u a nonnegative radial scalar drawn
// independently of y.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "rtme/errors.hpp"
#include "rtme/random.hpp"
#include "rtme/samples.hpp"
#include "rtme/scatter_matrix.hpp"

namespace rtme {

class RadialLaw {
 public:
  enum class Kind { constant = 0, student_t = 1, laplace = 2, cauchy = 3 };

  static RadialLaw constant() { return RadialLaw(Kind::constant, 0.0); }
  static RadialLaw laplace() { return RadialLaw(Kind::laplace, 0.0); }
  static RadialLaw cauchy() { return RadialLaw(Kind::cauchy, 0.0); }
  static RadialLaw student_t(double dof) {
    if (!(dof > 0.0) || !std::isfinite(dof)) {
      throw DomainError("Student-t degrees of freedom must be positive");
    }
    return RadialLaw(Kind::student_t, dof);
  }

  // Accepts the CLI spellings: gaussian | constant | student:<d> | laplace | cauchy.
  static RadialLaw parse(std::string_view text) {
    if (text == "gaussian" || text == "constant") return constant();
    if (text == "laplace") return laplace();
    if (text == "cauchy") return cauchy();
    if (text.starts_with("student:")) {
      const std::string dof(text.substr(8));
      std::size_t used = 0;
      double d = 0.0;
      try {
        d = std::stod(dof, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != dof.size()) {
        throw DomainError("bad Student-t degrees of freedom '" + dof + "'");
      }
      return student_t(d);
    }
    throw DomainError("unknown radial law '" + std::string(text) + "'");
  }

  Kind kind() const { return kind_; }
  double dof() const { return dof_; }

  std::string to_string() const {
    switch (kind_) {
      case Kind::constant: return "gaussian";
      case Kind::laplace: return "laplace";
      case Kind::cauchy: return "cauchy";
      case Kind::student_t: return "student:" + detail::format_double(dof_);
    }
    return "?";
  }

  // One draw of u >= 0. Signed standard forms are folded to |u|.
  double draw(SplitMix64& rng, NormalSampler& normal) const {
    switch (kind_) {
      case Kind::constant: return 1.0;
      case Kind::student_t: return std::sqrt(dof_ / sample_chi_squared(rng, normal, dof_));
      case Kind::laplace: return std::abs(sample_laplace(rng));
      case Kind::cauchy: return std::abs(sample_cauchy(rng));
    }
    return 1.0;
  }

  bool operator==(const RadialLaw&) const = default;

 private:
  RadialLaw(Kind kind, double dof) : kind_(kind), dof_(dof) {}
  Kind kind_;
  double dof_;
};

struct EllipticalSpec {
  Index dimension = 1;
  Index sample_count = 1;
  ScatterMatrix scatter = ScatterMatrix::identity(1);
  RadialLaw radial = RadialLaw::constant();
  std::uint64_t seed = 0;
};

// s_ij = gamma^|i-j|; positive definite for gamma in [0, 1).
inline ScatterMatrix toeplitz_scatter(Index p, double gamma) {
  if (p < 1) throw DomainError("toeplitz_scatter: p must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw DomainError("toeplitz_scatter: gamma must lie in [0, 1)");
  }
  Eigen::MatrixXd s(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      s(i, j) = std::pow(gamma, static_cast<double>(i > j ? i - j : j - i));
    }
  }
  return ScatterMatrix(std::move(s));
}

// Draws n rows z_i = u_i L y_i with S = L L^T. The y stream and the u stream
// are separate sub-streams of spec.seed, so two specs differing only in the
// radial law share their directions exactly.
inline RawSampleSet sample_elliptical(const EllipticalSpec& spec) {
  const Index p = spec.dimension;
  const Index n = spec.sample_count;
  if (p < 1 || n < 1) throw DomainError("sample_elliptical: p and n must be positive");
  if (spec.scatter.dim() != p) throw DimensionError("sample_elliptical: scatter is not p x p");

  SplitMix64 direction_rng = SplitMix64::substream(spec.seed, stream_id::kDirections);
  SplitMix64 radial_rng = SplitMix64::substream(
      spec.seed, stream_id::kRadialBase + static_cast<std::uint64_t>(spec.radial.kind()));
  NormalSampler direction_normal;
  NormalSampler radial_normal;

  // y uniform on the sphere: a standard Gaussian draw divided by its norm.
  Eigen::MatrixXd y(p, n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < p; ++k) y(k, i) = direction_normal(direction_rng);
    y.col(i) /= y.col(i).norm();
  }

  PolarForm polar;
  polar.directions = (spec.scatter.lower_factor().triangularView<Eigen::Lower>() * y).transpose();
  polar.radii.resize(n);
  for (Index i = 0; i < n; ++i) polar.radii(i) = spec.radial.draw(radial_rng, radial_normal);

  RawSampleSet out;
  out.rows = polar.radii.asDiagonal() * polar.directions;
  out.origin = SampleOrigin::synthetic(spec.seed);
  out.polar = std::move(polar);
  return out;
}

}  // namespace rtme
