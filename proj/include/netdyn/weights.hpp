#pragma once

// The composite parameter vector W of a network.
//
// Canonical flattening order, fixed for the lifetime of the format:
//   for each weight layer l = 2..L (input side first):
//     W_l in row-major order (n_l rows of n_{l-1} entries), then b_l.
// Parameter indices used by masks, diagnostics and CSV exports refer to this
// order.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "netdyn/architecture.hpp"
#include "netdyn/error.hpp"
#include "netdyn/rng.hpp"

namespace netdyn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;
using VectorView = Eigen::Map<Eigen::VectorXd>;
using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;

struct ParamLocation {
  std::size_t layer = 0;  // 1-based weight layer: 1 maps layer 1 -> layer 2
  std::size_t row = 0;
  std::size_t col = 0;    // 0 for biases
  bool is_bias = false;
};

class WeightSet {
 public:
  WeightSet() = default;

  /// All-zero parameters for `arch`.
  explicit WeightSet(NetworkArchitecture arch)
      : arch_(std::move(arch)), values_(arch_.parameter_count(), 0.0) {
    build_offsets();
  }

  /// Rebuilds a WeightSet from its canonical flat vector.
  static WeightSet unflatten(const NetworkArchitecture& arch, std::span<const double> flat) {
    if (flat.size() != arch.parameter_count()) {
      throw DimensionError("flat vector has " + std::to_string(flat.size()) +
                           " entries, architecture " + arch.to_string() + " needs " +
                           std::to_string(arch.parameter_count()));
    }
    WeightSet w(arch);
    std::copy(flat.begin(), flat.end(), w.values_.begin());
    return w;
  }

  const NetworkArchitecture& architecture() const noexcept { return arch_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const double> flat() const noexcept { return values_; }
  std::span<double> flat() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  /// Weight matrix of layer `l` (0-based weight layer), n_{l+1} x n_l.
  MatrixView weights(std::size_t l) {
    return {values_.data() + weight_offset_[l], rows(l), cols(l)};
  }
  ConstMatrixView weights(std::size_t l) const {
    return {values_.data() + weight_offset_[l], rows(l), cols(l)};
  }
  VectorView biases(std::size_t l) { return {values_.data() + bias_offset_[l], rows(l)}; }
  ConstVectorView biases(std::size_t l) const {
    return {values_.data() + bias_offset_[l], rows(l)};
  }

  std::size_t weight_offset(std::size_t l) const { return weight_offset_[l]; }
  std::size_t bias_offset(std::size_t l) const { return bias_offset_[l]; }

  ParamLocation locate(std::size_t index) const {
    if (index >= values_.size()) throw DimensionError("parameter index out of range");
    for (std::size_t l = 0; l < arch_.weight_layers(); ++l) {
      const std::size_t r = static_cast<std::size_t>(rows(l));
      const std::size_t c = static_cast<std::size_t>(cols(l));
      if (index < bias_offset_[l]) {
        const std::size_t k = index - weight_offset_[l];
        return {l + 1, k / c, k % c, false};
      }
      if (index < bias_offset_[l] + r) return {l + 1, index - bias_offset_[l], 0, true};
    }
    throw DimensionError("parameter index out of range");  // unreachable
  }

  bool is_finite() const noexcept {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  double norm_l1() const noexcept {
    double s = 0.0;
    for (double v : values_) s += std::abs(v);
    return s;
  }

  double norm_l2() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

  /// this += scale * other
  void axpy(double scale, const WeightSet& other) {
    require_same_shape(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other.values_[i];
  }

  void require_same_shape(const WeightSet& other) const {
    if (!(arch_ == other.arch_)) {
      throw DimensionError("weight sets have different architectures (" + arch_.to_string() +
                           " vs " + other.arch_.to_string() + ")");
    }
  }

  friend bool operator==(const WeightSet& a, const WeightSet& b) {
    return a.arch_ == b.arch_ && a.values_ == b.values_;
  }

 private:
  Eigen::Index rows(std::size_t l) const {
    return static_cast<Eigen::Index>(arch_.layer_sizes()[l + 1]);
  }
  Eigen::Index cols(std::size_t l) const {
    return static_cast<Eigen::Index>(arch_.layer_sizes()[l]);
  }

  void build_offsets() {
    const auto& n = arch_.layer_sizes();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < n.size(); ++l) {
      weight_offset_.push_back(offset);
      offset += n[l + 1] * n[l];
      bias_offset_.push_back(offset);
      offset += n[l + 1];
    }
  }

  NetworkArchitecture arch_;
  std::vector<double> values_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
};

/// Weights iid N(0, 1) drawn in canonical order; biases exactly zero.
inline WeightSet init_weights(const NetworkArchitecture& arch, std::uint64_t seed) {
  WeightSet w(arch);
  Rng rng(seed);
  for (std::size_t l = 0; l < arch.weight_layers(); ++l) {
    auto m = w.weights(l);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  }
  return w;
}

}  // namespace netdyn
