#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "support.hpp"

using namespace netdyn;
using netdyn::testing::data_path;
using netdyn::testing::fixture_path;
using netdyn::testing::iris;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(LoadIris, CanonicalShape) {
  const Dataset& d = iris();
  EXPECT_EQ(d.size(), 150u);
  EXPECT_EQ(d.feature_count(), 4u);
  EXPECT_EQ(d.class_count(), 3u);
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"setosa", "versicolor", "virginica"}));
  for (int c = 0; c < 3; ++c) EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), c), 50);
  for (Eigen::Index i = 0; i < d.targets.rows(); ++i) {
    EXPECT_EQ(d.targets.row(i).sum(), 1.0);
    EXPECT_EQ(d.targets(i, d.labels[static_cast<std::size_t>(i)]), 1.0);
  }
}

TEST(LoadIris, IdempotentLoads) {
  const Dataset a = load_iris(data_path("iris.csv"));
  const Dataset b = load_iris(data_path("iris.csv"));
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
}

TEST(LoadCsv, IntegerLabelsWithoutHeader) {
  const Dataset d = load_labeled_csv(fixture_path("tiny.csv"));
  EXPECT_EQ(d.size(), 4u);
  EXPECT_EQ(d.class_count(), 3u);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1, 2, 1}));
  EXPECT_EQ(d.targets.row(2), Eigen::RowVector3d(0, 0, 1));
  EXPECT_EQ(d.inputs(1, 1), -1.0);
}

TEST(LoadCsv, ErrorsNameTheLine) {
  EXPECT_NE(error_of([] { load_labeled_csv(fixture_path("malformed.csv")); }).find(":3:"), std::string::npos);
  EXPECT_NE(error_of([] { load_labeled_csv(fixture_path("ragged.csv")); }).find(":2:"), std::string::npos);
  EXPECT_THROW(load_labeled_csv(fixture_path("missing.csv")), ParseError);
}

TEST(OneHot, RoundTrip) {
  const Dataset& d = iris();
  for (Eigen::Index i = 0; i < d.targets.rows(); ++i) {
    Eigen::Index k = 0;
    d.targets.row(i).maxCoeff(&k);
    EXPECT_EQ(static_cast<int>(k), d.labels[static_cast<std::size_t>(i)]);
  }
}

TEST(LoadMnist, TinyFixture) {
  const Dataset d = load_mnist_idx(fixture_path("tiny-images.idx3"), fixture_path("tiny-labels.idx1"));
  EXPECT_EQ(d.size(), 12u);
  EXPECT_EQ(d.feature_count(), 6u);
  EXPECT_EQ(d.class_count(), 10u);
  EXPECT_DOUBLE_EQ(d.inputs(1, 2), ((1 * 37 + 2 * 11) % 256) / 255.0);
  EXPECT_EQ(d.labels[11], 1);
  EXPECT_GE(d.inputs.minCoeff(), 0.0);
  EXPECT_LE(d.inputs.maxCoeff(), 1.0);
}

TEST(LoadMnist, SeededSubset) {
  const auto a = load_mnist_idx(fixture_path("tiny-images.idx3"), fixture_path("tiny-labels.idx1"), 5, 3);
  const auto b = load_mnist_idx(fixture_path("tiny-images.idx3"), fixture_path("tiny-labels.idx1"), 5, 3);
  EXPECT_EQ(a.size(), 5u);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(subset_indices(12, 5, 3), subset_indices(12, 5, 3));
  const auto idx = subset_indices(1000, 100, 8);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 100u);
  EXPECT_NE(subset_indices(1000, 100, 8), subset_indices(1000, 100, 9));
}

TEST(LoadMnist, BundledSubset) {
  const Dataset d = load_mnist_idx(data_path("mnist5k/images-idx3-ubyte"), data_path("mnist5k/labels-idx1-ubyte"), 5000, 0);
  EXPECT_EQ(d.size(), 5000u);
  EXPECT_EQ(d.feature_count(), 784u);
  EXPECT_EQ(d.class_count(), 10u);
}

TEST(LoadMnist, Errors) {
  EXPECT_THROW(load_mnist_idx(fixture_path("bad-magic-images.idx3"), fixture_path("tiny-labels.idx1")), ParseError);
  EXPECT_THROW(load_mnist_idx(fixture_path("truncated-images.idx3"), fixture_path("tiny-labels.idx1")), ParseError);
  EXPECT_THROW(load_mnist_idx(fixture_path("tiny-images.idx3"), fixture_path("short-labels.idx1")), ParseError);
  EXPECT_THROW(load_mnist_idx(fixture_path("tiny-images.idx3"), fixture_path("tiny-labels.idx1"), 13), ConfigError);
}

TEST(Split, StratifiedIris) {
  const auto idx = split_indices(iris(), {120, 30, 4, true});
  std::vector<int> train_counts(3, 0), test_counts(3, 0);
  for (auto i : idx.train) ++train_counts[static_cast<std::size_t>(iris().labels[i])];
  for (auto i : idx.test) ++test_counts[static_cast<std::size_t>(iris().labels[i])];
  EXPECT_EQ(train_counts, (std::vector<int>{40, 40, 40}));
  EXPECT_EQ(test_counts, (std::vector<int>{10, 10, 10}));
}

TEST(Split, DisjointCoverageForManySeeds) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (bool strat : {true, false}) {
      const auto idx = split_indices(iris(), {100 + seed % 7, 20 + seed % 5, seed, strat});
      std::set<std::size_t> all(idx.train.begin(), idx.train.end());
      all.insert(idx.test.begin(), idx.test.end());
      EXPECT_EQ(all.size(), idx.train.size() + idx.test.size());
      EXPECT_EQ(idx.train.size(), 100 + seed % 7);
      EXPECT_EQ(idx.test.size(), 20 + seed % 5);
      if (strat) {
        for (int c = 0; c < 3; ++c) {
          const auto n = std::count_if(idx.train.begin(), idx.train.end(),
                                       [&](std::size_t i) { return iris().labels[i] == c; });
          EXPECT_NEAR(static_cast<double>(n), idx.train.size() / 3.0, 1.0);
        }
      }
    }
  }
}

TEST(Split, EdgeCases) {
  const auto [train_set, test_set] = split(iris(), {150, 0, 1, true});
  EXPECT_EQ(train_set.size(), 150u);
  EXPECT_TRUE(test_set.empty());
  EXPECT_EQ(split_indices(iris(), {120, 30, 6, true}).train, split_indices(iris(), {120, 30, 6, true}).train);
  EXPECT_THROW(split(iris(), {140, 20, 1, true}), ConfigError);
}

TEST(Standardize, TrainStatisticsOnly) {
  auto [train_set, test_set] = split(iris(), {120, 30, 2, true});
  const Dataset raw_test = test_set;
  const auto s = standardize(train_set, test_set);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const auto col = train_set.inputs.col(j).array();
    EXPECT_NEAR(col.mean(), 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt((col - col.mean()).square().mean()), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(test_set.inputs(0, j), (raw_test.inputs(0, j) - s.mean(j)) / s.std(j));
  }
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Standardize, ConstantFeaturePassesThrough) {
  Dataset train_set = load_labeled_csv(fixture_path("constant.csv"));
  Dataset test_set = train_set;
  const auto s = standardize(train_set, test_set);
  EXPECT_EQ(s.constant_features, (std::vector<std::size_t>{1}));
  EXPECT_EQ(s.warnings.size(), 1u);
  EXPECT_EQ(train_set.inputs(2, 1), 5.0);
  EXPECT_EQ(test_set.inputs(0, 1), 5.0);
}
