#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "netdyn/error.hpp"
#include "netdyn/weights.hpp"

namespace netdyn {

/// L1 network distance: sum over every parameter (biases included) of
/// |w - w'|.
inline double l1_distance(const WeightSet& a, const WeightSet& b) {
  a.require_same_shape(b);
  const auto x = a.flat();
  const auto y = b.flat();
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d += std::abs(x[i] - y[i]);
  return d;
}

/// d(t) sampled at increasing iterations.
struct DistanceSeries {
  std::vector<std::size_t> iterations;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }

  void push_back(std::size_t t, double d) {
    iterations.push_back(t);
    values.push_back(d);
  }

  /// Position of iteration t, or size() when absent.
  std::size_t position(std::size_t t) const noexcept {
    std::size_t lo = 0;
    std::size_t hi = iterations.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (iterations[mid] < t) lo = mid + 1;
      else hi = mid;
    }
    return (lo < iterations.size() && iterations[lo] == t) ? lo : iterations.size();
  }

  double at_iteration(std::size_t t) const {
    const std::size_t k = position(t);
    if (k == size()) throw DimensionError("iteration " + std::to_string(t) + " not in distance series");
    return values[k];
  }

  DistanceSeries scaled(double c) const {
    DistanceSeries s = *this;
    for (double& v : s.values) v *= c;
    return s;
  }
};

}  // namespace netdyn
