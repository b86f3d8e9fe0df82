#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rtme/random.hpp"

namespace rtme {
namespace {

TEST(SplitMix64, KnownFirstOutputs) {
  // Reference values of the standard splitmix64 sequence from seed 0.
  SplitMix64 rng(0);
  EXPECT_EQ(rng(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng(), 0x06C45D188009454FULL);
}

TEST(SplitMix64, SubstreamsAreDeterministicAndDistinct) {
  auto a = SplitMix64::substream(7, 1);
  auto b = SplitMix64::substream(7, 1);
  auto c = SplitMix64::substream(7, 2);
  auto d = SplitMix64::substream(8, 1);
  for (int k = 0; k < 100; ++k) {
    const auto va = a();
    EXPECT_EQ(va, b());
    EXPECT_NE(va, c());
    EXPECT_NE(va, d());
  }
}

TEST(SplitMix64, UniformStaysInsideOpenInterval) {
  SplitMix64 rng(123);
  double sum = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5e-3);
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <class Draw>
Moments moments(Draw draw, int n) {
  double s = 0.0;
  double s2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double v = draw();
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  return {mean, s2 / n - mean * mean};
}

TEST(Samplers, NormalMoments) {
  SplitMix64 rng(1);
  NormalSampler normal;
  const auto m = moments([&] { return normal(rng); }, 200000);
  EXPECT_NEAR(m.mean, 0.0, 0.01);
  EXPECT_NEAR(m.var, 1.0, 0.02);
}

TEST(Samplers, GammaMomentsAcrossShapes) {
  for (double shape : {0.5, 1.5, 4.0}) {
    SplitMix64 rng(2);
    NormalSampler normal;
    const auto m = moments([&] { return sample_gamma(rng, normal, shape); }, 200000);
    EXPECT_NEAR(m.mean, shape, 0.02 * shape + 0.01) << shape;
    EXPECT_NEAR(m.var, shape, 0.05 * shape + 0.02) << shape;
  }
}

TEST(Samplers, LaplaceMoments) {
  SplitMix64 rng(3);
  const auto m = moments([&] { return sample_laplace(rng); }, 200000);
  EXPECT_NEAR(m.mean, 0.0, 0.02);
  EXPECT_NEAR(m.var, 2.0, 0.05);
}

TEST(Samplers, CauchyQuartiles) {
  SplitMix64 rng(4);
  const int n = 100000;
  int below_minus_one = 0;
  int below_one = 0;
  for (int k = 0; k < n; ++k) {
    const double c = sample_cauchy(rng);
    below_minus_one += c < -1.0;
    below_one += c < 1.0;
  }
  EXPECT_NEAR(static_cast<double>(below_minus_one) / n, 0.25, 0.01);
  EXPECT_NEAR(static_cast<double>(below_one) / n, 0.75, 0.01);
}

}  // namespace
}  // namespace rtme
