#pragma once

// Splittable, seeded random streams for the synthetic generators.
//
// The base generator is SplitMix64 (Steele, Lea & Flood; Vigna's reference
// constants). Independent sub-streams are derived from a root seed by hashing
// (seed, stream id) through the SplitMix64 finalizer:
//
//   substream(seed, id).state = mix64(seed ^ mix64(id * 0x9E3779B97F4A7C15 + 1))
//
// so that, e.g., the direction stream of a dataset is the same no matter
// which radial law consumes the radial stream. All distributions below are
// implemented here rather than through <random> distributions, whose output
// is implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rtme {

namespace stream_id {
inline constexpr std::uint64_t kDirections = 1;
inline constexpr std::uint64_t kRadialBase = 16;  // + radial law index
}  // namespace stream_id

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr SplitMix64 substream(std::uint64_t seed, std::uint64_t id) {
    return SplitMix64(mix64(seed ^ mix64(id * 0x9E3779B97F4A7C15ULL + 1)));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  constexpr result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  // Uniform on the open interval (0, 1): 53 random mantissa bits, shifted by
  // half an ulp so neither endpoint occurs.
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Standard normal draws by the Box-Muller transform; consumes two uniforms
// per pair and caches the second variate.
class NormalSampler {
 public:
  double operator()(SplitMix64& rng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(rng.uniform()));
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Gamma(shape, 1) by Marsaglia & Tsang (2000); shape < 1 uses the
// Gamma(shape + 1) * U^(1/shape) boost.
inline double sample_gamma(SplitMix64& rng, NormalSampler& normal, double shape) {
  if (shape < 1.0) {
    const double boost = std::pow(rng.uniform(), 1.0 / shape);
    return sample_gamma(rng, normal, shape + 1.0) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline double sample_chi_squared(SplitMix64& rng, NormalSampler& normal, double dof) {
  return 2.0 * sample_gamma(rng, normal, 0.5 * dof);
}

// Laplace(0, 1) by inverse CDF.
inline double sample_laplace(SplitMix64& rng) {
  const double u = rng.uniform() - 0.5;
  return u < 0.0 ? std::log1p(2.0 * u) : -std::log1p(-2.0 * u);
}

// Cauchy(0, 1) by inverse CDF.
inline double sample_cauchy(SplitMix64& rng) {
  return std::tan(std::numbers::pi * (rng.uniform() - 0.5));
}

}  // namespace rtme
