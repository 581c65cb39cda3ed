#pragma once

// Per-parameter diagnostics of a trained orbit: relative displacement,
// path length (total variation) and single-parameter ablation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "netdyn/dataset.hpp"
#include "netdyn/error.hpp"
#include "netdyn/gd.hpp"
#include "netdyn/network.hpp"
#include "netdyn/stats.hpp"

namespace netdyn {

inline constexpr double kDisplacementZeroThreshold = 1e-12;

/// |w(T) - w(0)| / |w(0)|, undefined when |w(0)| < 1e-12 (zero-initialised
/// biases).
inline std::optional<double> displacement(const Trajectory& traj, std::size_t index) {
  if (traj.snapshots.size() < 2) throw ConfigError("displacement needs at least two snapshots");
  const double w0 = traj.snapshots.front().weights[index];
  const double wt = traj.snapshots.back().weights[index];
  if (std::abs(w0) < kDisplacementZeroThreshold) return std::nullopt;
  return std::abs(wt - w0) / std::abs(w0);
}

/// sum_t |w(t) - w(t-1)|. Needs every iterate, so stride must be 1.
inline double path_length(const Trajectory& traj, std::size_t index) {
  if (traj.snapshot_stride != 1) {
    throw ConfigError("path_length needs snapshot_stride = 1; coarser strides under-estimate it");
  }
  if (traj.snapshots.size() < 2) throw ConfigError("path_length needs at least two snapshots");
  double total = 0.0;
  for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
    total += std::abs(traj.snapshots[k].weights[index] - traj.snapshots[k - 1].weights[index]);
  }
  return total;
}

struct AblationResult {
  double baseline = 0.0;
  std::vector<double> delta;  // L with parameter p zeroed minus baseline

  /// delta / baseline
  std::vector<double> relative() const {
    std::vector<double> r(delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) r[i] = delta[i] / baseline;
    return r;
  }
};

/// Zeroes each parameter in turn and records the change in loss. `w` is
/// restored bit for bit before returning.
inline AblationResult ablation_importance(WeightSet& w, const Dataset& data,
                                          LossKind kind = LossKind::binary) {
  AblationResult r;
  r.baseline = loss(w, data, kind);
  r.delta.resize(w.size());
  for (std::size_t p = 0; p < w.size(); ++p) {
    const double saved = w[p];
    if (saved == 0.0) {
      r.delta[p] = 0.0;
      continue;
    }
    w[p] = 0.0;
    r.delta[p] = loss(w, data, kind) - r.baseline;
    w[p] = saved;
  }
  return r;
}

inline AblationResult ablation_importance(const WeightSet& w, const Dataset& data,
                                          LossKind kind = LossKind::binary) {
  WeightSet copy = w;
  return ablation_importance(copy, data, kind);
}

struct ParameterDiagnostics {
  std::size_t index = 0;
  ParamLocation location;
  double w0 = 0.0;
  double wT = 0.0;
  std::optional<double> displacement;
  double path_length = 0.0;
  double ablation_delta = 0.0;
  double ablation_relative = 0.0;
};

/// Every diagnostic for every parameter of a stride-1 trajectory; ablation is
/// evaluated at the final iterate.
inline std::vector<ParameterDiagnostics> weight_diagnostics(const Trajectory& traj,
                                                            const Dataset& data,
                                                            LossKind kind = LossKind::binary) {
  const WeightSet& last = traj.final_weights();
  const auto ablation = ablation_importance(last, data, kind);
  const auto rel = ablation.relative();
  std::vector<ParameterDiagnostics> out;
  out.reserve(last.size());
  for (std::size_t p = 0; p < last.size(); ++p) {
    ParameterDiagnostics d;
    d.index = p;
    d.location = last.locate(p);
    d.w0 = traj.initial()[p];
    d.wT = last[p];
    d.displacement = displacement(traj, p);
    d.path_length = path_length(traj, p);
    d.ablation_delta = ablation.delta[p];
    d.ablation_relative = rel[p];
    out.push_back(d);
  }
  return out;
}

/// Parameters with displacement below its q25 and path length above its q90,
/// quantiles taken over parameters with a defined displacement. A population
/// drifting like an unbiased random walk fills this corner.
inline std::size_t drift_quadrant_count(const std::vector<ParameterDiagnostics>& diag) {
  std::vector<double> disp;
  std::vector<double> path;
  for (const auto& d : diag) {
    if (!d.displacement) continue;
    disp.push_back(*d.displacement);
    path.push_back(d.path_length);
  }
  if (disp.empty()) return 0;
  const double q25 = quantile(disp, 0.25);
  const double q90 = quantile(path, 0.90);
  std::size_t count = 0;
  for (std::size_t i = 0; i < disp.size(); ++i) {
    if (disp[i] < q25 && path[i] > q90) ++count;
  }
  return count;
}

}  // namespace netdyn
