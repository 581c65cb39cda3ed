#pragma once

// Perturbed initial conditions inside an epsilon-hypercube and the ensembles
// of orbits started from them.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "netdyn/distance.hpp"
#include "netdyn/error.hpp"
#include "netdyn/gd.hpp"
#include "netdyn/parallel.hpp"
#include "netdyn/rng.hpp"
#include "netdyn/weights.hpp"

namespace netdyn {

struct PerturbationSpec {
  double epsilon = 1e-8;
  std::size_t count = 20;
  /// Flat parameter indices to perturb; nullopt means every parameter.
  std::optional<std::vector<std::size_t>> mask;
  std::uint64_t seed = 0;
  /// Only consulted when mask is nullopt.
  bool include_biases = true;

  void validate(std::size_t parameter_count) const {
    if (!(epsilon > 0.0)) throw ConfigError("perturbation epsilon must be positive");
    if (count == 0) throw ConfigError("perturbation count must be at least 1");
    if (mask) {
      if (mask->empty()) throw ConfigError("empty perturbation mask; omit the mask to perturb all");
      for (std::size_t i : *mask) {
        if (i >= parameter_count) throw ConfigError("mask index " + std::to_string(i) + " out of range");
      }
    }
  }

  /// Perturbed indices in ascending order.
  std::vector<std::size_t> indices(const WeightSet& w) const {
    if (mask) {
      std::vector<std::size_t> idx = *mask;
      std::sort(idx.begin(), idx.end());
      idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
      return idx;
    }
    std::vector<std::size_t> idx;
    idx.reserve(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (include_biases || !w.locate(i).is_bias) idx.push_back(i);
    }
    return idx;
  }
};

/// k distinct indices out of [0, parameter_count), drawn uniformly without
/// replacement and returned sorted.
inline std::vector<std::size_t> random_mask(std::size_t parameter_count, std::size_t k,
                                            std::uint64_t seed) {
  if (k == 0 || k > parameter_count) throw ConfigError("mask size must be in [1, parameter count]");
  std::vector<std::size_t> idx(parameter_count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "mask", k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(parameter_count - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// W' = W + delta, delta_i ~ U(-eps, eps) independently on the perturbed
/// indices. Member j draws from its own stream derive_seed(seed, "perturb", j).
inline WeightSet perturb(const WeightSet& w, const PerturbationSpec& spec, std::size_t member_index) {
  spec.validate(w.size());
  WeightSet out = w;
  Rng rng(derive_seed(spec.seed, "perturb", member_index));
  for (std::size_t i : spec.indices(w)) out[i] += rng.uniform(-spec.epsilon, spec.epsilon);
  return out;
}

/// Perturbed components whose offset was lost to rounding (w' == w).
inline std::size_t absorbed_components(const WeightSet& w, const WeightSet& perturbed,
                                       const PerturbationSpec& spec) {
  std::size_t n = 0;
  for (std::size_t i : spec.indices(w)) {
    if (perturbed[i] == w[i]) ++n;
  }
  return n;
}

struct EnsembleOptions {
  LossKind loss = LossKind::binary;
  std::size_t workers = 1;
  bool keep_member_snapshots = false;
  const Dataset* eval_data = nullptr;
};

struct EnsembleResult {
  Trajectory reference;
  std::vector<Trajectory> members;
  std::vector<DistanceSeries> distances;
  DistanceSeries mean_distance;
  std::vector<std::size_t> live_count;  // members contributing to each mean point
  std::vector<std::size_t> absorbed;    // per member, see absorbed_components
};

/// Pointwise mean over the members alive at each reference iteration,
/// accumulated in member order.
inline DistanceSeries mean_distance(const std::vector<DistanceSeries>& distances,
                                    std::vector<std::size_t>* live = nullptr) {
  DistanceSeries out;
  if (live) live->clear();
  if (distances.empty()) return out;
  std::size_t longest = 0;
  for (std::size_t j = 1; j < distances.size(); ++j) {
    if (distances[j].size() > distances[longest].size()) longest = j;
  }
  const auto& grid = distances[longest].iterations;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& d : distances) {
      if (k < d.size()) {
        sum += d.values[k];
        ++n;
      }
    }
    out.push_back(grid[k], sum / static_cast<double>(n));
    if (live) live->push_back(n);
  }
  return out;
}

/// Trains the reference orbit from w0 and spec.count perturbed orbits with the
/// same configuration, measuring d(t) to the reference at every recorded
/// iteration as the members run.
inline EnsembleResult run_ensemble(const WeightSet& w0, const PerturbationSpec& spec,
                                   const GDConfig& config, const Dataset& data,
                                   const EnsembleOptions& options = {}) {
  spec.validate(w0.size());
  config.validate();
  EnsembleResult r;
  TrainOptions ref_opts;
  ref_opts.loss = options.loss;
  ref_opts.eval_data = options.eval_data;
  r.reference = train(w0, config, data, ref_opts);

  r.members.resize(spec.count);
  r.distances.resize(spec.count);
  r.absorbed.resize(spec.count);
  parallel_for(spec.count, options.workers, [&](std::size_t j) {
    const WeightSet start = perturb(w0, spec, j);
    r.absorbed[j] = absorbed_components(w0, start, spec);
    DistanceSeries& dist = r.distances[j];
    TrainOptions opts;
    opts.loss = options.loss;
    opts.eval_data = options.eval_data;
    opts.keep_snapshots = options.keep_member_snapshots;
    opts.observer = [&](std::size_t t, const WeightSet& w) {
      if (!config.records(t)) return;
      if (const WeightSet* ref = r.reference.at(t)) dist.push_back(t, l1_distance(*ref, w));
    };
    r.members[j] = train(start, config, data, opts);
  });
  r.mean_distance = mean_distance(r.distances, &r.live_count);
  return r;
}

}  // namespace netdyn
