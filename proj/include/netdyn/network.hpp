#pragma once

// Forward evaluation, cross-entropy loss and backpropagated gradients of a
// sigmoid MLP. Every layer including the output applies the sigmoid; there is
// no softmax.
//
// Three readings of "cross-entropy" on sigmoid outputs F are supported, all
// averaged over the N samples:
//
//   binary      -sum_k [ y_k log F_k + (1 - y_k) log(1 - F_k) ]   (default)
//   normalized  -log( F_c / sum_k F_k )             c = true class
//   true_class  -log F_c
//
// true_class is the one-hot dot product taken literally. It only ever pushes
// outputs up, so every unit saturates at 1 and the classifier never becomes
// discriminative; it is kept for reference. Probabilities entering a log are
// clamped to [1e-12, 1 - 1e-12] and gradients use the clamped value.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "netdyn/dataset.hpp"
#include "netdyn/error.hpp"
#include "netdyn/weights.hpp"

namespace netdyn {

enum class LossKind { binary, normalized, true_class };

inline constexpr double kProbabilityClamp = 1e-12;

inline std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::binary: return "binary";
    case LossKind::normalized: return "normalized";
    case LossKind::true_class: return "true_class";
  }
  return "binary";
}

inline LossKind parse_loss_kind(std::string_view name) {
  if (name == "binary") return LossKind::binary;
  if (name == "normalized") return LossKind::normalized;
  if (name == "true_class") return LossKind::true_class;
  throw ConfigError("unknown loss '" + std::string(name) +
                    "' (expected binary, normalized or true_class)");
}

inline double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

namespace detail {

inline double clamp_probability(double p) noexcept {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

inline void check_inputs(const WeightSet& w, const Dataset& data) {
  if (data.empty()) throw DimensionError("dataset is empty");
  const auto& arch = w.architecture();
  if (data.feature_count() != arch.input_size()) {
    throw DimensionError("dataset has " + std::to_string(data.feature_count()) +
                         " features, network expects " + std::to_string(arch.input_size()));
  }
  if (data.class_count() != arch.output_size()) {
    throw DimensionError("dataset has " + std::to_string(data.class_count()) +
                         " classes, network outputs " + std::to_string(arch.output_size()));
  }
}

}  // namespace detail

/// Layer outputs f_1 = X, ..., f_L for a batch; row i belongs to sample i.
inline std::vector<Eigen::MatrixXd> forward_batch(const WeightSet& w, const Eigen::MatrixXd& x) {
  const auto& arch = w.architecture();
  if (static_cast<std::size_t>(x.cols()) != arch.input_size()) {
    throw DimensionError("input width " + std::to_string(x.cols()) + " does not match " +
                         std::to_string(arch.input_size()));
  }
  std::vector<Eigen::MatrixXd> f;
  f.reserve(arch.layer_sizes().size());
  f.push_back(x);
  for (std::size_t l = 0; l < arch.weight_layers(); ++l) {
    Eigen::MatrixXd z = f.back() * w.weights(l).transpose();
    z.rowwise() += w.biases(l).transpose();
    f.push_back(z.unaryExpr([](double v) { return sigmoid(v); }));
  }
  return f;
}

/// Network output F(x; W) for one input vector.
inline Eigen::VectorXd forward(const WeightSet& w, const Eigen::VectorXd& x) {
  const auto& arch = w.architecture();
  if (static_cast<std::size_t>(x.size()) != arch.input_size()) {
    throw DimensionError("input length " + std::to_string(x.size()) + " does not match " +
                         std::to_string(arch.input_size()));
  }
  Eigen::VectorXd f = x;
  for (std::size_t l = 0; l < arch.weight_layers(); ++l) {
    Eigen::VectorXd z = w.weights(l) * f + w.biases(l);
    f = z.unaryExpr([](double v) { return sigmoid(v); });
  }
  return f;
}

/// Per-sample loss contributions for output rows `out` (not yet averaged).
inline double sample_loss(LossKind kind, const Eigen::Ref<const Eigen::RowVectorXd>& out,
                          const Eigen::Ref<const Eigen::RowVectorXd>& target, int label) {
  switch (kind) {
    case LossKind::binary: {
      double s = 0.0;
      for (Eigen::Index k = 0; k < out.size(); ++k) {
        const double p = detail::clamp_probability(out[k]);
        s -= target[k] * std::log(p) + (1.0 - target[k]) * std::log(1.0 - p);
      }
      return s;
    }
    case LossKind::normalized: {
      const double q = detail::clamp_probability(out[label] / out.sum());
      return -std::log(q);
    }
    case LossKind::true_class:
      return -std::log(detail::clamp_probability(out[label]));
  }
  return 0.0;
}

namespace detail {

inline double loss_from_output(LossKind kind, const Eigen::MatrixXd& out, const Dataset& data) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    total += sample_loss(kind, out.row(i), data.targets.row(i), data.labels[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(out.rows());
}

// dL/dF for the averaged loss.
inline Eigen::MatrixXd output_sensitivity(LossKind kind, const Eigen::MatrixXd& out,
                                          const Dataset& data) {
  const double inv_n = 1.0 / static_cast<double>(out.rows());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const int c = data.labels[static_cast<std::size_t>(i)];
    switch (kind) {
      case LossKind::binary:
        for (Eigen::Index k = 0; k < out.cols(); ++k) {
          const double p = clamp_probability(out(i, k));
          const double y = data.targets(i, k);
          g(i, k) = (-y / p + (1.0 - y) / (1.0 - p)) * inv_n;
        }
        break;
      case LossKind::normalized: {
        const double s = out.row(i).sum();
        const double q = clamp_probability(out(i, c) / s);
        for (Eigen::Index k = 0; k < out.cols(); ++k) {
          const double dq = ((k == c ? 1.0 : 0.0) - out(i, c) / s) / s;
          g(i, k) = -dq / q * inv_n;
        }
        break;
      }
      case LossKind::true_class:
        g(i, c) = -1.0 / clamp_probability(out(i, c)) * inv_n;
        break;
    }
  }
  return g;
}

}  // namespace detail

inline double loss(const WeightSet& w, const Dataset& data, LossKind kind = LossKind::binary) {
  detail::check_inputs(w, data);
  const auto f = forward_batch(w, data.inputs);
  return detail::loss_from_output(kind, f.back(), data);
}

struct LossAndGradient {
  double loss = 0.0;
  WeightSet gradient;
  double accuracy = 0.0;  // argmax accuracy of the same forward pass
};

inline double accuracy_from_output(const Eigen::MatrixXd& out, const Dataset& data);

/// Loss and its full-batch gradient with respect to every parameter.
inline LossAndGradient loss_and_gradient(const WeightSet& w, const Dataset& data,
                                         LossKind kind = LossKind::binary) {
  detail::check_inputs(w, data);
  const auto f = forward_batch(w, data.inputs);
  const std::size_t layers = w.architecture().weight_layers();

  LossAndGradient out{detail::loss_from_output(kind, f.back(), data), WeightSet(w.architecture()),
                      accuracy_from_output(f.back(), data)};

  // delta = dL/dz for the current layer, N x n_l
  Eigen::MatrixXd delta = detail::output_sensitivity(kind, f.back(), data).cwiseProduct(
      f.back().cwiseProduct((1.0 - f.back().array()).matrix()));
  for (std::size_t l = layers; l-- > 0;) {
    out.gradient.weights(l) = delta.transpose() * f[l];
    out.gradient.biases(l) = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * w.weights(l);
      delta = back.cwiseProduct(f[l].cwiseProduct((1.0 - f[l].array()).matrix()));
    }
  }
  return out;
}

inline WeightSet gradient(const WeightSet& w, const Dataset& data, LossKind kind = LossKind::binary) {
  return loss_and_gradient(w, data, kind).gradient;
}

/// Index of the largest component; ties go to the lowest index.
inline int argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = k;
  }
  return static_cast<int>(best);
}

inline double accuracy_from_output(const Eigen::MatrixXd& out, const Dataset& data) {
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (argmax(out.row(i)) == data.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(out.rows());
}

inline double accuracy(const WeightSet& w, const Dataset& data) {
  detail::check_inputs(w, data);
  return accuracy_from_output(forward_batch(w, data.inputs).back(), data);
}

}  // namespace netdyn
