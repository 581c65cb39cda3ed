#pragma once

// Quasi-periodic / irregular segmentation of a scalar series.
//
// The series is cut into non-overlapping windows. Inside a window the values
// at stride n_regions form n_regions bands (values[k], values[k + n], ...).
// The window is quasi-periodic when the band centres are distinct and every
// band width is at most tolerance times the smallest gap between centres.
// Runs of equally classified windows are merged; leftover points at the end
// join the last segment.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netdyn/error.hpp"

namespace netdyn {

enum class SegmentClass { quasi_periodic, irregular };

inline std::string to_string(SegmentClass c) {
  return c == SegmentClass::quasi_periodic ? "quasi_periodic" : "irregular";
}

struct Segment {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  SegmentClass kind = SegmentClass::irregular;

  std::size_t length() const noexcept { return end - start; }
};

struct SegmentOptions {
  std::size_t n_regions = 3;
  std::size_t window = 12;
  double tolerance = 1e-3;

  void validate() const {
    if (n_regions < 2) throw ConfigError("segments n_regions must be at least 2");
    if (window < 2 * n_regions) throw ConfigError("segments window must hold two values per region");
    if (!(tolerance > 0.0)) throw ConfigError("segments tolerance must be positive");
  }
};

/// Classification of one window.
inline SegmentClass classify_window(std::span<const double> w, std::size_t n_regions, double tolerance) {
  std::vector<double> centres(n_regions);
  double widest = 0.0;
  for (std::size_t k = 0; k < n_regions; ++k) {
    double lo = w[k], hi = w[k], sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = k; i < w.size(); i += n_regions) {
      lo = std::min(lo, w[i]);
      hi = std::max(hi, w[i]);
      sum += w[i];
      ++n;
    }
    centres[k] = sum / static_cast<double>(n);
    widest = std::max(widest, hi - lo);
  }
  std::sort(centres.begin(), centres.end());
  double gap = centres[1] - centres[0];
  for (std::size_t k = 2; k < n_regions; ++k) gap = std::min(gap, centres[k] - centres[k - 1]);
  return gap > 0.0 && widest <= tolerance * gap ? SegmentClass::quasi_periodic : SegmentClass::irregular;
}

inline std::vector<Segment> flag_quasi_periodic(std::span<const double> x, const SegmentOptions& options = {}) {
  options.validate();
  if (x.size() < 3 * options.window) throw DimensionError("segments need at least three windows of data");
  std::vector<Segment> out;
  const std::size_t windows = x.size() / options.window;
  for (std::size_t k = 0; k < windows; ++k) {
    const std::size_t start = k * options.window;
    const SegmentClass c = classify_window(x.subspan(start, options.window), options.n_regions, options.tolerance);
    if (!out.empty() && out.back().kind == c) {
      out.back().end = start + options.window;
    } else {
      out.push_back({start, start + options.window, c});
    }
  }
  out.back().end = x.size();
  return out;
}

/// Longest segment of the given class, or nullptr.
inline const Segment* longest_segment(const std::vector<Segment>& segments, SegmentClass kind) {
  const Segment* best = nullptr;
  for (const auto& s : segments) {
    if (s.kind == kind && (!best || s.length() > best->length())) best = &s;
  }
  return best;
}

}  // namespace netdyn
