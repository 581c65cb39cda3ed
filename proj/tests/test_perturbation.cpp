#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace netdyn;
using netdyn::testing::iris;

namespace {
const NetworkArchitecture kIrisArch({4, 10, 3}, Activation::sigmoid);
}

TEST(Perturb, DistanceWithinHypercubeBound) {
  const WeightSet w = init_weights(kIrisArch, 1);
  PerturbationSpec spec;
  spec.epsilon = 1e-3;
  spec.seed = 4;
  for (std::size_t j = 0; j < 50; ++j) {
    const WeightSet p = perturb(w, spec, j);
    const double d = l1_distance(w, p);
    EXPECT_GT(d, 0.0);
    EXPECT_LE(d, 83 * 1e-3);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_LE(std::abs(p[i] - w[i]), 1e-3 * (1 + 1e-12));
  }
}

TEST(Perturb, MeanInitialDistanceAndEpsilonScaling) {
  // E|U(-eps, eps)| = eps / 2 per component. Zero weights keep the offsets exact.
  const WeightSet w(kIrisArch);
  for (double eps : {1e-6, 2e-6}) {
    PerturbationSpec spec;
    spec.epsilon = eps;
    spec.seed = 77;
    double total = 0.0;
    constexpr std::size_t draws = 10000;
    for (std::size_t j = 0; j < draws; ++j) total += l1_distance(w, perturb(w, spec, j));
    EXPECT_NEAR(total / draws, 83 * eps / 2, 0.05 * 83 * eps / 2);
  }
}

TEST(Perturb, MemberStreamsAreIndependentOfEnsembleSize) {
  const WeightSet w = init_weights(kIrisArch, 1);
  PerturbationSpec spec;
  spec.seed = 9;
  spec.count = 3;
  const WeightSet p2 = perturb(w, spec, 2);
  spec.count = 40;
  EXPECT_TRUE(perturb(w, spec, 2) == p2);
  EXPECT_FALSE(perturb(w, spec, 3) == p2);
}

TEST(Perturb, MaskTouchesOnlyMaskedParameters) {
  const NetworkArchitecture mnist({784, 64, 10}, Activation::sigmoid);
  const WeightSet w = init_weights(mnist, 0);
  PerturbationSpec spec;
  spec.epsilon = 1e-8;
  spec.mask = random_mask(w.size(), 10, 5);
  const WeightSet p = perturb(w, spec, 0);
  std::size_t same = 0;
  for (std::size_t i = 0; i < w.size(); ++i) same += p[i] == w[i];
  EXPECT_EQ(same, 50880u);
  EXPECT_EQ(random_mask(w.size(), 10, 5), *spec.mask);
}

TEST(Perturb, ExcludeBiases) {
  const WeightSet w = init_weights(kIrisArch, 1);
  PerturbationSpec spec;
  spec.include_biases = false;
  const WeightSet p = perturb(w, spec, 0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w.locate(i).is_bias) {
      EXPECT_EQ(p[i], w[i]);
    }
  }
}

TEST(Perturb, TinyEpsilonAbsorptionIsCounted) {
  const WeightSet w = init_weights(kIrisArch, 1);
  PerturbationSpec spec;
  spec.epsilon = 1e-17;
  const WeightSet p = perturb(w, spec, 0);
  const std::size_t absorbed = absorbed_components(w, p, spec);
  EXPECT_GT(absorbed, 0u);
  EXPECT_LT(absorbed, 83u);  // zero biases take the offset exactly
  EXPECT_GT(l1_distance(w, p), 0.0);
}

TEST(PerturbationSpec, Validation) {
  const WeightSet w(kIrisArch);
  PerturbationSpec spec;
  spec.epsilon = 0.0;
  EXPECT_THROW(perturb(w, spec, 0), ConfigError);
  spec.epsilon = 1e-8;
  spec.count = 0;
  EXPECT_THROW(spec.validate(83), ConfigError);
  spec.count = 1;
  spec.mask = std::vector<std::size_t>{83};
  EXPECT_THROW(spec.validate(83), ConfigError);
  EXPECT_THROW(random_mask(83, 0, 1), ConfigError);
  EXPECT_THROW(random_mask(83, 84, 1), ConfigError);
}

TEST(Ensemble, OnlineDistancesMatchRecomputation) {
  const WeightSet w0 = init_weights(kIrisArch, 3);
  PerturbationSpec spec;
  spec.count = 4;
  spec.seed = 1;
  EnsembleOptions opts;
  opts.keep_member_snapshots = true;
  const auto ens = run_ensemble(w0, spec, {1.0, 40, 1}, iris(), opts);
  ASSERT_EQ(ens.distances.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) {
    ASSERT_EQ(ens.distances[j].size(), 41u);
    for (std::size_t t = 0; t <= 40; ++t) {
      EXPECT_EQ(ens.distances[j].values[t],
                l1_distance(ens.reference.snapshots[t].weights, ens.members[j].snapshots[t].weights));
    }
  }
  for (std::size_t t = 0; t <= 40; ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < 4; ++j) s += ens.distances[j].values[t];
    EXPECT_EQ(ens.mean_distance.values[t], s / 4.0);
    EXPECT_EQ(ens.live_count[t], 4u);
  }
}

TEST(Ensemble, WorkerCountDoesNotChangeResults) {
  const WeightSet w0 = init_weights(kIrisArch, 3);
  PerturbationSpec spec;
  spec.count = 6;
  EnsembleOptions one, many;
  many.workers = 4;
  const auto a = run_ensemble(w0, spec, {1.0, 30, 3}, iris(), one);
  const auto b = run_ensemble(w0, spec, {1.0, 30, 3}, iris(), many);
  EXPECT_EQ(a.mean_distance.values, b.mean_distance.values);
  EXPECT_EQ(a.mean_distance.iterations, b.mean_distance.iterations);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(a.members[j].loss, b.members[j].loss);
}

TEST(Ensemble, LowRateDistanceIsNotExponential) {
  const WeightSet w0 = init_weights(kIrisArch, 2);
  PerturbationSpec spec;
  spec.epsilon = 1e-8;
  spec.count = 5;
  const auto ens = run_ensemble(w0, spec, {0.01, 3000, 1}, iris());
  WindowSearch search;
  search.min_window = 100;
  search.horizon = 3000;
  const ExpFit fit = fit_saturation_window(ens.mean_distance, search);
  EXPECT_FALSE(fit.valid && fit.r_squared > 0.9);
  const double ratio = ens.mean_distance.values.back() / ens.mean_distance.values.front();
  EXPECT_LT(ratio, 1e3);
  EXPECT_GT(ratio, 1e-3);
}
