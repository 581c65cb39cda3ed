#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace netdyn;
using netdyn::testing::iris;
using netdyn::testing::random_dataset;

namespace {
const NetworkArchitecture kIrisArch({4, 10, 3}, Activation::sigmoid);
}

TEST(GdStep, IsTheGradientMap) {
  const WeightSet w = init_weights(kIrisArch, 2);
  const WeightSet g = gradient(w, iris());
  const auto step = gd_step(w, 0.1, iris());
  ASSERT_TRUE(step.finite);
  for (std::size_t p = 0; p < w.size(); ++p) EXPECT_EQ(step.weights[p], w[p] + (-0.1) * g[p]);
}

TEST(GdStep, ZeroRateLeavesWeightsUnchanged) {
  const WeightSet w = init_weights(kIrisArch, 5);
  EXPECT_TRUE(gd_step(w, 0.0, iris()).weights == w);
}

TEST(GdStep, SmallStepDecreasesLoss) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const WeightSet w = init_weights(kIrisArch, seed);
    EXPECT_LT(loss(gd_step(w, 1e-4, iris()).weights, iris()), loss(w, iris()));
  }
}

TEST(GdStep, NonFiniteResultIsFlagged) {
  WeightSet w = init_weights(kIrisArch, 1);
  w[0] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(gd_step(w, 0.1, iris()).finite);
}

TEST(GDConfig, Validation) {
  EXPECT_THROW((GDConfig{0.0, 10, 1}.validate()), ConfigError);
  EXPECT_THROW((GDConfig{0.1, 10, 0}.validate()), ConfigError);
  const GDConfig c{0.1, 10, 4};
  EXPECT_TRUE(c.records(0));
  EXPECT_TRUE(c.records(8));
  EXPECT_FALSE(c.records(9));
  EXPECT_TRUE(c.records(10));
}

TEST(Train, ZeroIterationsIsSingleSnapshot) {
  const WeightSet w0 = init_weights(kIrisArch, 1);
  const auto traj = train(w0, {0.01, 0, 1}, iris());
  ASSERT_EQ(traj.snapshots.size(), 1u);
  EXPECT_TRUE(traj.initial() == w0);
  EXPECT_EQ(traj.loss.size(), 1u);
}

TEST(Train, RecordsEverySeriesAndStrideSnapshots) {
  const WeightSet w0 = init_weights(kIrisArch, 1);
  const auto [train_set, test_set] = split(iris(), {120, 30, 0, true});
  TrainOptions opts;
  opts.eval_data = &test_set;
  const auto traj = train(w0, {0.01, 25, 10}, train_set, opts);
  EXPECT_EQ(traj.loss.size(), 26u);
  EXPECT_EQ(traj.accuracy_test.size(), 26u);
  EXPECT_EQ(traj.norm_l2.size(), 26u);
  ASSERT_EQ(traj.snapshots.size(), 4u);  // 0, 10, 20, 25
  EXPECT_EQ(traj.snapshots[3].iteration, 25u);
  EXPECT_NE(traj.at(20), nullptr);
  EXPECT_EQ(traj.at(21), nullptr);
  EXPECT_NEAR(traj.norm_l1[0], w0.norm_l1(), 0.0);
}

TEST(Train, DeterministicAndComposable) {
  const WeightSet w0 = init_weights(kIrisArch, 7);
  const GDConfig full{0.5, 60, 1};
  const auto a = train(w0, full, iris());
  const auto b = train(w0, full, iris());
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_TRUE(a.final_weights() == b.final_weights());

  const auto first = train(w0, {0.5, 25, 1}, iris());
  const auto second = train(first.final_weights(), {0.5, 35, 1}, iris());
  for (std::size_t k = 0; k <= 35; ++k) {
    EXPECT_TRUE(second.snapshots[k].weights == a.snapshots[25 + k].weights) << k;
  }
}

TEST(Train, DivergenceStopsRecording) {
  // Saturating sigmoids keep every finite-rate orbit bounded, so an infinite
  // rate is used to make the first step non-finite.
  const NetworkArchitecture arch({2, 8, 2}, Activation::sigmoid);
  const Dataset data = random_dataset(6, 2, 2, 1);
  const auto traj = train(init_weights(arch, 1), {std::numeric_limits<double>::infinity(), 50, 1}, data);
  ASSERT_TRUE(traj.diverged());
  EXPECT_EQ(*traj.diverged_at, 1u);
  EXPECT_EQ(traj.loss.size(), *traj.diverged_at);
  for (const auto& s : traj.snapshots) {
    EXPECT_TRUE(s.weights.is_finite());
    EXPECT_LT(s.iteration, *traj.diverged_at);
  }
}

TEST(Train, NonFiniteLossAtStart) {
  const NetworkArchitecture arch({2, 3, 2}, Activation::sigmoid);
  Dataset data = random_dataset(4, 2, 2, 1);
  data.inputs(2, 1) = std::numeric_limits<double>::quiet_NaN();
  const auto traj = train(init_weights(arch, 1), {0.1, 10, 1}, data);
  ASSERT_TRUE(traj.diverged());
  EXPECT_EQ(*traj.diverged_at, 0u);
  EXPECT_TRUE(traj.loss.empty());
  EXPECT_TRUE(traj.snapshots.empty());
}

TEST(Train, FixedPointResidence) {
  // Saturated outputs make the gradient vanish to within rounding.
  const NetworkArchitecture arch({1, 1, 2}, Activation::sigmoid);
  const Dataset data = Dataset::from_rows({{0.0}}, {0}, 2);
  WeightSet w(arch);
  w.biases(1)(0) = 800.0;
  w.biases(1)(1) = -800.0;
  ASSERT_LT(gradient(w, data).norm_l1(), 1e-15);
  const auto traj = train(w, {0.01, 20, 1}, data);
  for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
    EXPECT_LT(l1_distance(traj.snapshots[k].weights, traj.snapshots[k - 1].weights), 0.01 * 1e-15);
  }
}

TEST(Train, LowRateIrisLossIsMonotone) {
  const auto traj = train(init_weights(kIrisArch, 0), {0.01, 4000, 100}, iris());
  ASSERT_FALSE(traj.diverged());
  for (std::size_t t = 1; t < traj.loss.size(); ++t) EXPECT_LE(traj.loss[t], traj.loss[t - 1] + 1e-12);
}

TEST(Train, LargeRateIrisStaysFinite) {
  const auto traj = train(init_weights(kIrisArch, 0), {5.0, 5000, 5000}, iris());
  EXPECT_FALSE(traj.diverged());
  EXPECT_EQ(traj.loss.size(), 5001u);
  double peak = 0.0;
  for (double l : traj.loss) peak = std::max(peak, l);
  EXPECT_GT(peak, 1.0);
}
