#pragma once

#include <string>
#include <vector>

#include "netdyn/netdyn.hpp"

namespace netdyn::testing {

inline std::string data_path(const std::string& name) { return std::string(NETDYN_DATA_DIR) + "/" + name; }
inline std::string fixture_path(const std::string& name) {
  return std::string(NETDYN_FIXTURE_DIR) + "/" + name;
}

inline const Dataset& iris() {
  static const Dataset d = load_iris(data_path("iris.csv"));
  return d;
}

/// Random dataset with `n` samples drawn from N(0, 1) features and uniform labels.
inline Dataset random_dataset(std::size_t n, std::size_t features, std::size_t classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows(n, std::vector<double>(features));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : rows[i]) v = rng.normal();
    labels[i] = static_cast<int>(rng.below(classes));
  }
  return Dataset::from_rows(rows, labels, classes);
}

}  // namespace netdyn::testing
