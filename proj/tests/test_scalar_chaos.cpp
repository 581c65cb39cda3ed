#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace netdyn;

namespace {

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  return x;
}

std::vector<double> logistic_orbit(std::size_t n, double x0) {
  std::vector<double> x(n);
  x[0] = x0;
  for (std::size_t t = 1; t < n; ++t) x[t] = 4.0 * x[t - 1] * (1.0 - x[t - 1]);
  return x;
}

}  // namespace

TEST(Acf, LagZeroIsOne) {
  const auto x = white_noise(300, 1);
  EXPECT_EQ(acf(x, 10)[0], 1.0);
}

TEST(Acf, PeriodTwoAlternation) {
  std::vector<double> x(1000);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = t % 2 ? 3.0 : -1.0;
  const auto r = acf(x, 4);
  EXPECT_NEAR(r[1], -1.0, 2.0 / 1000);
  EXPECT_NEAR(r[2], 1.0, 3.0 / 1000);
}

TEST(Acf, AutoregressiveDecay) {
  Rng rng(3);
  std::vector<double> x(100000);
  for (std::size_t t = 1; t < x.size(); ++t) x[t] = 0.8 * x[t - 1] + rng.normal();
  const auto r = acf(x, 10);
  for (int k = 1; k <= 10; ++k) EXPECT_NEAR(r[k], std::pow(0.8, k), 0.03) << k;
}

TEST(Acf, AffineInvariance) {
  const auto x = white_noise(500, 2);
  std::vector<double> y(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) y[t] = -2.5 * x[t] + 40.0;
  const auto a = acf(x, 20), b = acf(y, 20);
  for (std::size_t k = 0; k <= 20; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(Acf, Errors) {
  EXPECT_THROW(acf(std::vector<double>(50, 1.0), 5), DegenerateError);
  EXPECT_THROW(acf(white_noise(20, 1), 10), DimensionError);
}

TEST(ShuffleNull, WhiteNoiseStaysInsideBand) {
  double inside = 0.0, total = 0.0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const auto x = white_noise(400, 1000 + rep);
    const auto r = shuffle_null(x, 20, {1000, 0.05, rep, 1});
    for (std::size_t k = 1; k <= 20; ++k) {
      inside += r.acf[k] >= r.null_low[k] && r.acf[k] <= r.null_high[k];
      total += 1;
    }
  }
  EXPECT_GE(inside / total, 0.9);
}

TEST(ShuffleNull, BandShrinksWithLength) {
  const auto small = shuffle_null(white_noise(400, 1), 5, {1000, 0.05, 1, 1});
  const auto large = shuffle_null(white_noise(1600, 1), 5, {1000, 0.05, 1, 1});
  for (std::size_t k = 1; k <= 5; ++k) {
    const double ratio = (small.null_high[k] - small.null_low[k]) / (large.null_high[k] - large.null_low[k]);
    EXPECT_NEAR(ratio, 2.0, 0.3) << k;
  }
}

TEST(ShuffleNull, PeriodicSeriesExitsAtPeriodLags) {
  std::vector<double> x(600);
  const auto noise = white_noise(600, 8);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::sin(2 * std::numbers::pi * t / 5.0) + 0.1 * noise[t];
  const auto r = shuffle_null(x, 20, {1000, 0.05, 2, 1});
  for (std::size_t k : {5u, 10u, 15u, 20u}) EXPECT_GT(r.acf[k], r.null_high[k]) << k;
  EXPECT_EQ(r.acf.size(), 21u);
}

TEST(ShuffleNull, Deterministic) {
  const auto x = white_noise(300, 5);
  const auto a = shuffle_null(x, 10, {200, 0.05, 7, 1});
  const auto b = shuffle_null(x, 10, {200, 0.05, 7, 3});
  EXPECT_EQ(a.null_low, b.null_low);
  EXPECT_EQ(a.null_high, b.null_high);
}

TEST(Kantz, LogisticMapRecoversLn2) {
  const auto x = logistic_orbit(100000, 0.123456789);
  double oracle = 0.0;
  for (double v : x) oracle += std::log(std::abs(4.0 - 8.0 * v));
  oracle /= static_cast<double>(x.size());
  EXPECT_NEAR(oracle, std::numbers::ln2, 0.01);

  KantzParams p;
  p.radius_fraction = 1e-4;
  p.seed = 1;
  const auto r = kantz_expansion(x, p);
  EXPECT_GT(r.significant_fraction(), 0.5);
  EXPECT_NEAR(r.mean_significant_lambda(), oracle, 0.1 * oracle);
}

TEST(Kantz, WhiteNoiseFalsePositiveControl) {
  const auto x = white_noise(20000, 12);
  for (double radius : {0.05, 1e-2}) {
    KantzParams p;
    p.radius_fraction = radius;
    p.seed = 2;
    const auto r = kantz_expansion(x, p);
    ASSERT_FALSE(r.anchors.empty());
    EXPECT_LE(r.significant_fraction(), p.alpha + 0.05) << radius;
  }
}

TEST(Kantz, PeriodicSeriesHasNoSignificantAnchors) {
  std::vector<double> x(5000);
  const double cycle[] = {0.1, 0.7, 0.3, 0.9, 0.5, 0.2, 0.6};
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = cycle[t % 7];
  KantzParams p;
  p.n_surrogates = 50;
  const auto r = kantz_expansion(x, p);
  for (const auto& a : r.anchors) EXPECT_GE(a.p_value, 0.05);
  EXPECT_EQ(r.anchors.size() + r.skipped, p.n_anchors);
}

TEST(Kantz, PreconditionsAndSkips) {
  EXPECT_THROW(kantz_expansion(white_noise(110, 1)), DimensionError);
  KantzParams bad;
  bad.fit_end = 30;
  EXPECT_THROW(kantz_expansion(white_noise(1000, 1), bad), ConfigError);
  KantzParams tight;
  tight.radius_fraction = 1e-9;
  tight.n_surrogates = 5;
  const auto r = kantz_expansion(white_noise(1000, 1), tight);
  EXPECT_TRUE(r.anchors.empty());
  EXPECT_EQ(r.skipped, std::min<std::size_t>(tight.n_anchors, 1000 - tight.horizon));
}

TEST(Kantz, HistogramCountsEveryAnchor) {
  const auto x = logistic_orbit(5000, 0.3);
  KantzParams p;
  p.n_surrogates = 20;
  const auto r = kantz_expansion(x, p);
  const auto h = r.histogram(10, -1.0, 2.0);
  std::size_t total = 0;
  for (auto c : h) total += c;
  EXPECT_EQ(total, r.anchors.size());
  for (const auto& a : r.anchors) EXPECT_EQ(a.significant, a.p_value < 0.05);
}

TEST(Segments, ExactPeriodThreeIsOneSegment) {
  std::vector<double> x(300);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::array{2.0, 5.0, 3.5}[t % 3];
  const auto s = flag_quasi_periodic(x);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].kind, SegmentClass::quasi_periodic);
  EXPECT_EQ(s[0].start, 0u);
  EXPECT_EQ(s[0].end, 300u);
}

TEST(Segments, WhiteNoiseHasNoQuasiPeriodicSegment) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const auto& s : flag_quasi_periodic(white_noise(1200, seed))) {
      EXPECT_EQ(s.kind, SegmentClass::irregular) << seed;
    }
  }
}

TEST(Segments, AlternatingRegimes) {
  // 120 steps of a jittered 3-cycle, 120 of noise, repeated.
  const auto noise = white_noise(960, 4);
  std::vector<double> x(960);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const bool laminar = (t / 120) % 2 == 0;
    x[t] = laminar ? std::array{1.0, 4.0, 2.0}[t % 3] + 1e-7 * noise[t] : 2.0 + noise[t];
  }
  const auto s = flag_quasi_periodic(x);
  ASSERT_EQ(s.size(), 8u);
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_EQ(s[k].kind, k % 2 ? SegmentClass::irregular : SegmentClass::quasi_periodic);
    EXPECT_EQ(s[k].start, 120 * k);
  }
  ASSERT_NE(longest_segment(s, SegmentClass::irregular), nullptr);
}

TEST(Segments, OffsetInvariance) {
  const auto noise = white_noise(600, 9);
  std::vector<double> x(600), y(600);
  for (std::size_t t = 0; t < x.size(); ++t) {
    x[t] = (t < 300 ? std::array{0.5, 1.5, 3.0}[t % 3] + 1e-6 * noise[t] : noise[t]);
    y[t] = x[t] + 16.0;
  }
  const auto a = flag_quasi_periodic(x), b = flag_quasi_periodic(y);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].start, b[k].start);
    EXPECT_EQ(a[k].kind, b[k].kind);
  }
}

TEST(Segments, Preconditions) {
  EXPECT_THROW(flag_quasi_periodic(white_noise(30, 1)), DimensionError);
  SegmentOptions bad;
  bad.window = 4;
  EXPECT_THROW(flag_quasi_periodic(white_noise(300, 1), bad), ConfigError);
}
