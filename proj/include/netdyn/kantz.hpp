#pragma once

// Local expansion rates of a scalar series in the style of Kantz (1994).
//
// The series is delay-embedded. For each anchor point i the neighbours j
// within `radius` (max norm, |i - j| > theiler_window) are followed forward
// and
//
//   S_i(n) = ln( mean_j || y_{i+n} - y_{j+n} || ),   n = 0..horizon.
//
// The anchor's exponent is the OLS slope of S_i(n) over n in
// [fit_start, fit_end]. Starting the fit at n = 1 leaves out the first step,
// where neighbours of an uncorrelated series jump straight to attractor scale
// and which would otherwise dominate the slope.
//
// Significance is a permutation test: the same anchors are processed on
// n_surrogates shuffled copies of the series and the pooled surrogate slopes
// form the null distribution. p_i = (1 + #{null >= slope_i}) / (1 + #null).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "netdyn/error.hpp"
#include "netdyn/parallel.hpp"
#include "netdyn/rng.hpp"
#include "netdyn/stats.hpp"

namespace netdyn {

struct KantzParams {
  std::size_t embed_dim = 1;
  std::size_t delay = 1;
  double radius_fraction = 0.05;  // neighbourhood radius as a fraction of the series std
  std::size_t theiler_window = 10;
  std::size_t min_neighbors = 5;
  std::size_t max_neighbors = 20;  // nearest ones kept when more qualify
  std::size_t horizon = 20;
  std::size_t fit_start = 1;
  std::size_t fit_end = 10;
  std::size_t n_anchors = 1000;  // evenly spaced over the usable range
  std::size_t n_surrogates = 200;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const {
    if (embed_dim == 0 || delay == 0) throw ConfigError("kantz embed_dim and delay must be positive");
    if (!(radius_fraction > 0.0)) throw ConfigError("kantz radius_fraction must be positive");
    if (min_neighbors == 0 || max_neighbors < min_neighbors) {
      throw ConfigError("kantz needs 1 <= min_neighbors <= max_neighbors");
    }
    if (fit_end <= fit_start || fit_end > horizon) {
      throw ConfigError("kantz fit window must satisfy fit_start < fit_end <= horizon");
    }
    if (n_anchors == 0) throw ConfigError("kantz n_anchors must be positive");
  }
};

struct KantzAnchor {
  std::size_t index = 0;
  std::vector<double> curve;  // S_i(0..horizon)
  std::size_t neighbors = 0;
  double lambda = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

struct KantzResult {
  std::vector<KantzAnchor> anchors;  // anchors with enough neighbours
  std::size_t skipped = 0;           // anchors dropped for too few neighbours
  double radius = 0.0;
  std::size_t null_size = 0;

  double significant_fraction() const {
    if (anchors.empty()) return 0.0;
    std::size_t s = 0;
    for (const auto& a : anchors) s += a.significant ? 1 : 0;
    return static_cast<double>(s) / static_cast<double>(anchors.size());
  }

  /// Mean lambda over significant anchors (NaN when none).
  double mean_significant_lambda() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& a : anchors) {
      if (a.significant) {
        sum += a.lambda;
        ++n;
      }
    }
    return n ? sum / static_cast<double>(n) : std::nan("");
  }

  /// Counts of anchor lambdas in `bins` equal bins over [lo, hi]; values
  /// outside are clamped into the end bins.
  std::vector<std::size_t> histogram(std::size_t bins, double lo, double hi) const {
    std::vector<std::size_t> h(bins, 0);
    if (bins == 0 || !(hi > lo)) return h;
    for (const auto& a : anchors) {
      auto k = static_cast<long>(std::floor((a.lambda - lo) / (hi - lo) * static_cast<double>(bins)));
      k = std::clamp<long>(k, 0, static_cast<long>(bins) - 1);
      ++h[static_cast<std::size_t>(k)];
    }
    return h;
  }
};

namespace detail {

class DelayEmbedding {
 public:
  DelayEmbedding(std::span<const double> x, std::size_t dim, std::size_t delay)
      : x_(x), dim_(dim), delay_(delay) {}

  std::size_t points() const noexcept {
    const std::size_t span = (dim_ - 1) * delay_;
    return x_.size() > span ? x_.size() - span : 0;
  }

  /// Max-norm distance between embedded points a and b.
  double distance(std::size_t a, std::size_t b) const noexcept {
    double d = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      d = std::max(d, std::abs(x_[a + k * delay_] - x_[b + k * delay_]));
    }
    return d;
  }

  double first(std::size_t a) const noexcept { return x_[a]; }

 private:
  std::span<const double> x_;
  std::size_t dim_;
  std::size_t delay_;
};

struct AnchorCurve {
  bool valid = false;
  std::size_t neighbors = 0;
  std::vector<double> curve;
  double slope = 0.0;
};

// Anchor curves for one series. `usable` is the number of embedded points
// whose future up to `horizon` exists.
inline std::vector<AnchorCurve> anchor_curves(std::span<const double> x,
                                              const std::vector<std::size_t>& anchors,
                                              std::size_t usable, double radius,
                                              const KantzParams& p) {
  DelayEmbedding emb(x, p.embed_dim, p.delay);
  // Candidates sorted by the first coordinate; max-norm neighbours lie in a
  // contiguous band of that order.
  std::vector<std::size_t> order(usable);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return emb.first(a) < emb.first(b); });
  std::vector<double> keys(usable);
  for (std::size_t k = 0; k < usable; ++k) keys[k] = emb.first(order[k]);

  std::vector<double> fit_n;
  for (std::size_t n = p.fit_start; n <= p.fit_end; ++n) fit_n.push_back(static_cast<double>(n));

  std::vector<AnchorCurve> out(anchors.size());
  std::vector<std::pair<double, std::size_t>> near;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const std::size_t i = anchors[a];
    const double xi = emb.first(i);
    const auto lo = std::lower_bound(keys.begin(), keys.end(), xi - radius) - keys.begin();
    const auto hi = std::upper_bound(keys.begin(), keys.end(), xi + radius) - keys.begin();
    near.clear();
    for (auto k = lo; k < hi; ++k) {
      const std::size_t j = order[static_cast<std::size_t>(k)];
      const std::size_t gap = i > j ? i - j : j - i;
      if (gap <= p.theiler_window) continue;
      const double d = emb.distance(i, j);
      if (d <= radius) near.emplace_back(d, j);
    }
    if (near.size() < p.min_neighbors) continue;
    if (near.size() > p.max_neighbors) {
      std::partial_sort(near.begin(), near.begin() + static_cast<long>(p.max_neighbors), near.end());
      near.resize(p.max_neighbors);
    }
    AnchorCurve c;
    c.neighbors = near.size();
    c.curve.resize(p.horizon + 1);
    bool ok = true;
    for (std::size_t n = 0; n <= p.horizon; ++n) {
      double s = 0.0;
      for (const auto& [d0, j] : near) s += emb.distance(i + n, j + n);
      s /= static_cast<double>(near.size());
      if (!(s > 0.0) && n >= p.fit_start && n <= p.fit_end) ok = false;
      c.curve[n] = s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity();
    }
    if (!ok) continue;
    std::vector<double> fit_s(c.curve.begin() + static_cast<long>(p.fit_start),
                              c.curve.begin() + static_cast<long>(p.fit_end) + 1);
    c.slope = fit_line(fit_n, fit_s).slope;
    c.valid = true;
    out[a] = std::move(c);
  }
  return out;
}

}  // namespace detail

/// Per-anchor local expansion rates with permutation p-values.
inline KantzResult kantz_expansion(std::span<const double> x, const KantzParams& params = {}) {
  params.validate();
  const std::size_t span = (params.embed_dim - 1) * params.delay;
  if (x.size() < span + params.horizon + 100) {
    throw DimensionError("kantz needs length - (embed_dim - 1) * delay - horizon >= 100");
  }
  const std::size_t usable = x.size() - span - params.horizon;
  const double sd = stddev(x);
  if (!(sd > 0.0)) throw DegenerateError("degenerate series: zero variance");

  KantzResult r;
  r.radius = params.radius_fraction * sd;

  std::vector<std::size_t> anchors;
  const std::size_t count = std::min(params.n_anchors, usable);
  for (std::size_t k = 0; k < count; ++k) {
    anchors.push_back(count == 1 ? 0 : k * (usable - 1) / (count - 1));
  }

  const auto observed = detail::anchor_curves(x, anchors, usable, r.radius, params);

  std::vector<std::vector<double>> null_parts(params.n_surrogates);
  parallel_for(params.n_surrogates, params.workers, [&](std::size_t s) {
    std::vector<double> y(x.begin(), x.end());
    Rng rng(derive_seed(params.seed, "kantz-surrogate", s));
    shuffle(y, rng);
    for (auto& c : detail::anchor_curves(y, anchors, usable, r.radius, params)) {
      if (c.valid) null_parts[s].push_back(c.slope);
    }
  });
  std::vector<double> null;
  for (const auto& part : null_parts) null.insert(null.end(), part.begin(), part.end());
  std::sort(null.begin(), null.end());
  r.null_size = null.size();

  for (std::size_t a = 0; a < anchors.size(); ++a) {
    if (!observed[a].valid) {
      ++r.skipped;
      continue;
    }
    KantzAnchor k;
    k.index = anchors[a];
    k.curve = observed[a].curve;
    k.neighbors = observed[a].neighbors;
    k.lambda = observed[a].slope;
    const auto at_least = static_cast<double>(null.end() - std::lower_bound(null.begin(), null.end(), k.lambda));
    k.p_value = (1.0 + at_least) / (1.0 + static_cast<double>(null.size()));
    k.significant = k.p_value < params.alpha;
    r.anchors.push_back(std::move(k));
  }
  return r;
}

}  // namespace netdyn
