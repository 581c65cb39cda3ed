#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "netdyn/error.hpp"

namespace netdyn {

enum class Activation { sigmoid };

/// Layer widths n_1 ... n_L of a fully connected feed-forward network,
/// input first. Every non-input layer applies the activation.
class NetworkArchitecture {
 public:
  NetworkArchitecture() = default;

  explicit NetworkArchitecture(std::vector<std::size_t> layer_sizes,
                               Activation activation = Activation::sigmoid)
      : sizes_(std::move(layer_sizes)), activation_(activation) {
    if (sizes_.size() < 3) {
      throw ConfigError("architecture needs an input, at least one hidden and an output layer");
    }
    for (std::size_t n : sizes_) {
      if (n == 0) throw ConfigError("layer sizes must be positive");
    }
  }

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  Activation activation() const noexcept { return activation_; }

  std::size_t input_size() const noexcept { return sizes_.front(); }
  std::size_t output_size() const noexcept { return sizes_.back(); }

  /// Number of weight layers, L - 1.
  std::size_t weight_layers() const noexcept { return sizes_.size() - 1; }

  /// Sum over l = 2..L of n_l * n_{l-1} + n_l.
  std::size_t parameter_count() const noexcept {
    std::size_t total = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) total += sizes_[l] * sizes_[l - 1] + sizes_[l];
    return total;
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
      if (i) s += '-';
      s += std::to_string(sizes_[i]);
    }
    return s;
  }

  friend bool operator==(const NetworkArchitecture&, const NetworkArchitecture&) = default;

 private:
  std::vector<std::size_t> sizes_;
  Activation activation_ = Activation::sigmoid;
};

}  // namespace netdyn
