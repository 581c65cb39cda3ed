#pragma once

// The gradient-descent map g(W; eta) = W - eta * grad L(W) and the orbits it
// generates.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "netdyn/dataset.hpp"
#include "netdyn/error.hpp"
#include "netdyn/network.hpp"
#include "netdyn/weights.hpp"

namespace netdyn {

struct GDConfig {
  double eta = 0.01;
  std::size_t iterations = 1000;
  std::size_t snapshot_stride = 1;

  void validate() const {
    if (!(eta > 0.0)) throw ConfigError("eta must be positive");
    if (snapshot_stride == 0) throw ConfigError("snapshot_stride must be positive");
  }

  /// Snapshots are taken at t = 0, every multiple of the stride, and t = T.
  bool records(std::size_t t) const noexcept {
    return t % snapshot_stride == 0 || t == iterations;
  }
};

struct Snapshot {
  std::size_t iteration = 0;
  WeightSet weights;
};

/// One orbit of the GD map. Scalar series are indexed by iteration t and hold
/// one value per t = 0..T, or 0..diverged_at-1 when the run diverged.
struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<double> loss;
  std::vector<double> accuracy_train;
  std::vector<double> accuracy_test;  // empty without eval data
  std::vector<double> loss_test;      // empty without eval data
  std::vector<double> norm_l1;
  std::vector<double> norm_l2;
  std::optional<std::size_t> diverged_at;
  std::size_t snapshot_stride = 1;

  bool diverged() const noexcept { return diverged_at.has_value(); }
  const WeightSet& initial() const { return snapshots.front().weights; }
  const WeightSet& final_weights() const { return snapshots.back().weights; }

  /// Snapshot at iteration t, or nullptr when t was not recorded.
  const WeightSet* at(std::size_t t) const {
    if (snapshots.empty()) return nullptr;
    const std::size_t k = t / snapshot_stride;
    if (k < snapshots.size() && snapshots[k].iteration == t) return &snapshots[k].weights;
    if (snapshots.back().iteration == t) return &snapshots.back().weights;
    return nullptr;
  }

  /// Parameter `index` across all recorded snapshots.
  std::vector<double> parameter_series(std::size_t index) const {
    std::vector<double> out;
    out.reserve(snapshots.size());
    for (const auto& s : snapshots) out.push_back(s.weights[index]);
    return out;
  }
};

struct StepResult {
  WeightSet weights;
  bool finite = true;
};

/// One full-batch step. A non-finite result is returned flagged, not thrown.
inline StepResult gd_step(const WeightSet& w, double eta, const Dataset& data,
                          LossKind kind = LossKind::binary) {
  StepResult r{w, true};
  r.weights.axpy(-eta, gradient(w, data, kind));
  r.finite = r.weights.is_finite();
  return r;
}

struct TrainOptions {
  LossKind loss = LossKind::binary;
  const Dataset* eval_data = nullptr;
  bool keep_snapshots = true;
  /// Called with every iterate W(t), t = 0..T, before the step is applied.
  std::function<void(std::size_t, const WeightSet&)> observer;
};

/// Iterates the GD map `config.iterations` times from `w0`.
///
/// Stops at the first non-finite iterate or loss and records its iteration in
/// `diverged_at`; nothing from that iterate onwards is stored.
inline Trajectory train(const WeightSet& w0, const GDConfig& config, const Dataset& data,
                        const TrainOptions& options = {}) {
  config.validate();
  Trajectory traj;
  traj.snapshot_stride = config.snapshot_stride;
  const std::size_t n = config.iterations + 1;
  traj.loss.reserve(n);
  traj.accuracy_train.reserve(n);
  traj.norm_l1.reserve(n);
  traj.norm_l2.reserve(n);

  WeightSet w = w0;
  for (std::size_t t = 0; t <= config.iterations; ++t) {
    if (!w.is_finite()) {
      traj.diverged_at = t;
      break;
    }
    std::optional<LossAndGradient> lg;
    double loss_t = 0.0;
    double acc_t = 0.0;
    if (t < config.iterations) {
      lg = loss_and_gradient(w, data, options.loss);
      loss_t = lg->loss;
      acc_t = lg->accuracy;
    } else {
      const auto out = forward_batch(w, data.inputs).back();
      loss_t = detail::loss_from_output(options.loss, out, data);
      acc_t = accuracy_from_output(out, data);
    }
    if (!std::isfinite(loss_t)) {
      traj.diverged_at = t;
      break;
    }
    traj.loss.push_back(loss_t);
    traj.accuracy_train.push_back(acc_t);
    traj.norm_l1.push_back(w.norm_l1());
    traj.norm_l2.push_back(w.norm_l2());
    if (options.eval_data != nullptr && !options.eval_data->empty()) {
      const auto out = forward_batch(w, options.eval_data->inputs).back();
      traj.loss_test.push_back(detail::loss_from_output(options.loss, out, *options.eval_data));
      traj.accuracy_test.push_back(accuracy_from_output(out, *options.eval_data));
    }
    if (config.records(t) && (options.keep_snapshots || t == 0 || t == config.iterations)) {
      traj.snapshots.push_back({t, w});
    }
    if (options.observer) options.observer(t, w);
    if (lg) w.axpy(-config.eta, lg->gradient);
  }
  return traj;
}

}  // namespace netdyn
