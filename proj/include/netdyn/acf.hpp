#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "netdyn/error.hpp"
#include "netdyn/parallel.hpp"
#include "netdyn/rng.hpp"
#include "netdyn/stats.hpp"

namespace netdyn {

/// Biased sample autocorrelation for lags 0..max_lag:
///   acf[k] = sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2
inline std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
  if (x.size() < 2) throw DimensionError("acf needs at least two values");
  if (2 * max_lag >= x.size()) throw DimensionError("acf max_lag must be below half the series length");
  const double m = mean(x);
  std::vector<double> c(x.size());
  double denom = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    c[t] = x[t] - m;
    denom += c[t] * c[t];
  }
  if (!(denom > 0.0)) throw DegenerateError("degenerate series: zero variance");
  std::vector<double> out(max_lag + 1);
  out[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t + k < x.size(); ++t) s += c[t] * c[t + k];
    out[k] = s / denom;
  }
  return out;
}

struct AcfResult {
  std::vector<double> acf;
  std::vector<double> null_low;   // alpha/2 percentile of shuffled ACFs
  std::vector<double> null_high;  // 1 - alpha/2 percentile
  std::size_t n_shuffles = 0;
  double alpha = 0.05;

  /// Lags k >= 1 where the ACF leaves [null_low, null_high].
  std::vector<std::size_t> significant_lags() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 1; k < acf.size(); ++k) {
      if (acf[k] < null_low[k] || acf[k] > null_high[k]) out.push_back(k);
    }
    return out;
  }
};

struct ShuffleNullOptions {
  std::size_t n_shuffles = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// ACF of the series plus a per-lag band from the ACFs of random
/// permutations. Permutation s uses the stream derive_seed(seed, "shuffle", s).
inline AcfResult shuffle_null(std::span<const double> x, std::size_t max_lag,
                              const ShuffleNullOptions& options = {}) {
  if (options.n_shuffles == 0) throw ConfigError("shuffle_null needs at least one shuffle");
  AcfResult r;
  r.acf = acf(x, max_lag);
  r.n_shuffles = options.n_shuffles;
  r.alpha = options.alpha;
  std::vector<std::vector<double>> null(options.n_shuffles);
  parallel_for(options.n_shuffles, options.workers, [&](std::size_t s) {
    std::vector<double> y(x.begin(), x.end());
    Rng rng(derive_seed(options.seed, "shuffle", s));
    shuffle(y, rng);
    null[s] = acf(y, max_lag);
  });
  r.null_low.resize(max_lag + 1);
  r.null_high.resize(max_lag + 1);
  std::vector<double> column(options.n_shuffles);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    for (std::size_t s = 0; s < options.n_shuffles; ++s) column[s] = null[s][k];
    r.null_low[k] = quantile(column, options.alpha / 2.0);
    r.null_high[k] = quantile(column, 1.0 - options.alpha / 2.0);
  }
  return r;
}

}  // namespace netdyn
