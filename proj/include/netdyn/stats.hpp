#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "netdyn/error.hpp"

namespace netdyn {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw DegenerateError("mean of empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Population standard deviation (divides by n).
inline double stddev(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size()));
}

/// Sample standard deviation (divides by n - 1); 0 for a single value.
inline double sample_stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of an unsorted sample.
inline double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw DegenerateError("quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double h = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope * x. R^2 is 0 when y is
/// constant.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("fit_line needs >= 2 paired points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw DegenerateError("fit_line needs distinct x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 0.0;
  return f;
}

/// Centered moving average with the window truncated at the ends.
inline std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  if (window == 0) throw ConfigError("moving_average window must be positive");
  const std::size_t half = window / 2;
  std::vector<double> out(x.size());
  std::vector<double> prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(x.size(), lo + window);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

struct ExtremaCount {
  std::size_t maxima = 0;
  std::size_t minima = 0;
};

/// Strict interior local extrema; plateaus count once.
inline ExtremaCount count_local_extrema(std::span<const double> x) {
  ExtremaCount c;
  int last_dir = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const int dir = x[i] > x[i - 1] ? 1 : (x[i] < x[i - 1] ? -1 : 0);
    if (dir == 0) continue;
    if (last_dir == 1 && dir == -1) ++c.maxima;
    if (last_dir == -1 && dir == 1) ++c.minima;
    last_dir = dir;
  }
  return c;
}

}  // namespace netdyn
