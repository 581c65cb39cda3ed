#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "netdyn/error.hpp"

namespace netdyn {

/// Labelled samples: one row of `inputs` per sample and the matching one-hot
/// row of `targets`.
struct Dataset {
  Eigen::MatrixXd inputs;   // N x n_1
  Eigen::MatrixXd targets;  // N x n_L, one-hot
  std::vector<int> labels;  // class index per sample
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  std::size_t feature_count() const noexcept { return static_cast<std::size_t>(inputs.cols()); }
  std::size_t class_count() const noexcept { return static_cast<std::size_t>(targets.cols()); }

  /// Builds inputs/targets from per-sample rows and labels.
  static Dataset from_rows(const std::vector<std::vector<double>>& rows,
                           const std::vector<int>& labels, std::size_t classes) {
    if (rows.size() != labels.size()) throw DimensionError("rows and labels differ in length");
    Dataset d;
    const std::size_t n = rows.size();
    const std::size_t width = n ? rows.front().size() : 0;
    d.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
    d.targets = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(classes));
    d.labels = labels;
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != width) throw DimensionError("ragged input rows");
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
        throw DimensionError("label " + std::to_string(labels[i]) + " outside [0, " +
                             std::to_string(classes) + ")");
      }
      for (std::size_t j = 0; j < width; ++j) {
        d.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
      d.targets(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return d;
  }

  /// Subset in the given index order.
  Dataset select(const std::vector<std::size_t>& indices) const {
    Dataset d;
    const auto n = static_cast<Eigen::Index>(indices.size());
    d.inputs.resize(n, inputs.cols());
    d.targets.resize(n, targets.cols());
    d.class_names = class_names;
    d.labels.reserve(indices.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto src = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(i)]);
      d.inputs.row(i) = inputs.row(src);
      d.targets.row(i) = targets.row(src);
      d.labels.push_back(labels[static_cast<std::size_t>(src)]);
    }
    return d;
  }

  /// Concatenation of `times` copies of this dataset.
  Dataset repeated(std::size_t times) const {
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < times; ++r) {
      for (std::size_t i = 0; i < size(); ++i) idx.push_back(i);
    }
    return select(idx);
  }
};

}  // namespace netdyn
