#pragma once

// Finite network Lyapunov exponents from perturbation ensembles.
//
//   Lambda = (1 / tau) ln( mean_j d_j(tau) / mean_j d_j(0) )
//
// The ensemble mean is taken before the logarithm. When the exponential
// phase starts later than t = 0, the same ratio is taken between the window
// start t0 and its end: Lambda = ln(dbar(t1) / dbar(t0)) / (t1 - t0).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "netdyn/distance.hpp"
#include "netdyn/error.hpp"
#include "netdyn/gd.hpp"
#include "netdyn/parallel.hpp"
#include "netdyn/perturbation.hpp"
#include "netdyn/rng.hpp"
#include "netdyn/stats.hpp"

namespace netdyn {

inline constexpr double kMinExponentRSquared = 0.9;
inline constexpr double kMinExponent = 0.05;

namespace detail {

inline double ensemble_mean_at(std::span<const DistanceSeries> distances, std::size_t t) {
  if (distances.empty()) throw DegenerateError("empty distance ensemble");
  double s = 0.0;
  for (const auto& d : distances) s += d.at_iteration(t);
  return s / static_cast<double>(distances.size());
}

}  // namespace detail

/// Ensemble expansion rate between iterations t0 < t1.
inline double finite_exponent_between(std::span<const DistanceSeries> distances, std::size_t t0,
                                      std::size_t t1) {
  if (t1 <= t0) throw ConfigError("finite exponent needs t1 > t0");
  const double d0 = detail::ensemble_mean_at(distances, t0);
  if (!(d0 > 0.0)) throw DegenerateError("degenerate perturbation: mean initial distance is zero");
  const double d1 = detail::ensemble_mean_at(distances, t1);
  return std::log(d1 / d0) / static_cast<double>(t1 - t0);
}

/// Lambda with saturation time tau, measured from t = 0.
inline double finite_exponent(std::span<const DistanceSeries> distances, std::size_t tau) {
  return finite_exponent_between(distances, 0, tau);
}

/// Window search for the exponential phase of a mean distance curve.
struct WindowSearch {
  std::size_t min_window = 20;
  std::size_t horizon = 500;
  /// Latest allowed window start; nullopt lets the start slide over the
  /// whole horizon.
  std::optional<std::size_t> max_start = 50;
  /// Only windows whose fitted slope exceeds this are candidates.
  double min_slope = kMinExponent;
};

/// OLS fit of ln d(t) against t on [t_start, t_end].
struct ExpFit {
  bool valid = false;
  std::size_t t_start = 0;
  std::size_t t_end = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Best exponential window: among windows [t0, t1] with t1 - t0 >=
/// min_window, t1 <= horizon, t0 <= max_start and fitted slope > min_slope,
/// the one with the largest R^2. Points with non-positive or non-finite d
/// invalidate every window containing them. Returns valid = false when no
/// window qualifies.
inline ExpFit fit_saturation_window(const DistanceSeries& series, const WindowSearch& search = {}) {
  ExpFit best;
  const std::size_t n = series.size();
  if (n < 2) return best;

  // Prefix sums over (t, y = ln d) with a running count of unusable points.
  std::vector<double> st(n + 1, 0.0), stt(n + 1, 0.0), sy(n + 1, 0.0), syy(n + 1, 0.0),
      sty(n + 1, 0.0);
  std::vector<std::size_t> bad(n + 1, 0);
  const double origin = static_cast<double>(series.iterations.front());
  for (std::size_t i = 0; i < n; ++i) {
    const double d = series.values[i];
    const bool ok = std::isfinite(d) && d > 0.0;
    const double t = static_cast<double>(series.iterations[i]) - origin;
    const double y = ok ? std::log(d) : 0.0;
    st[i + 1] = st[i] + t;
    stt[i + 1] = stt[i] + t * t;
    sy[i + 1] = sy[i] + y;
    syy[i + 1] = syy[i] + y * y;
    sty[i + 1] = sty[i] + t * y;
    bad[i + 1] = bad[i] + (ok ? 0 : 1);
  }

  double best_r2 = -1.0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t ts = series.iterations[s];
    if (search.max_start && ts > *search.max_start) break;
    if (ts > search.horizon) break;
    for (std::size_t e = s + 1; e < n; ++e) {
      const std::size_t te = series.iterations[e];
      if (te > search.horizon) break;
      if (te - ts < search.min_window) continue;
      if (bad[e + 1] - bad[s] != 0) continue;
      const double m = static_cast<double>(e - s + 1);
      const double sx = st[e + 1] - st[s];
      const double sxx = stt[e + 1] - stt[s];
      const double syv = sy[e + 1] - sy[s];
      const double syyv = syy[e + 1] - syy[s];
      const double sxy = sty[e + 1] - sty[s];
      const double vx = sxx - sx * sx / m;
      const double vy = syyv - syv * syv / m;
      const double cxy = sxy - sx * syv / m;
      if (vx <= 0.0 || vy <= 0.0) continue;
      const double slope = cxy / vx;
      if (!(slope > search.min_slope)) continue;
      const double r2 = std::min(1.0, cxy * cxy / (vx * vy));
      if (r2 > best_r2) {
        best_r2 = r2;
        best.valid = true;
        best.t_start = ts;
        best.t_end = te;
        best.slope = slope;
        best.intercept = (syv - slope * sx) / m - slope * origin;
        best.r_squared = r2;
      }
    }
  }
  return best;
}

struct ExponentEstimate {
  double lambda = 0.0;
  std::size_t tau = 0;      // window end
  std::size_t t_start = 0;  // window start
  double slope = 0.0;       // OLS slope of ln dbar on the window
  double r_squared = 0.0;
  bool accepted = false;    // r_squared > 0.9 and lambda > 0.05
  std::size_t initial_condition_id = 0;
};

/// Fits the window on the ensemble mean and evaluates Lambda over it.
inline ExponentEstimate estimate_exponent(std::span<const DistanceSeries> distances,
                                          const DistanceSeries& mean_curve,
                                          const WindowSearch& search = {}) {
  ExponentEstimate e;
  const ExpFit fit = fit_saturation_window(mean_curve, search);
  if (!fit.valid) return e;
  e.t_start = fit.t_start;
  e.tau = fit.t_end;
  e.slope = fit.slope;
  e.r_squared = fit.r_squared;
  e.lambda = finite_exponent_between(distances, fit.t_start, fit.t_end);
  e.accepted = e.r_squared > kMinExponentRSquared && e.lambda > kMinExponent;
  return e;
}

struct ExponentDistribution {
  std::vector<ExponentEstimate> estimates;  // every initial condition, by id
  double mean = std::numeric_limits<double>::quiet_NaN();  // lambda_nMLE
  double std = std::numeric_limits<double>::quiet_NaN();
  double kept_fraction = 0.0;
  std::size_t accepted_count = 0;

  std::vector<double> accepted_lambdas() const {
    std::vector<double> out;
    for (const auto& e : estimates) {
      if (e.accepted) out.push_back(e.lambda);
    }
    return out;
  }
};

/// Mean and sample std over accepted estimates only.
inline ExponentDistribution summarize(std::vector<ExponentEstimate> estimates) {
  ExponentDistribution d;
  d.estimates = std::move(estimates);
  const auto kept = d.accepted_lambdas();
  d.accepted_count = kept.size();
  d.kept_fraction = d.estimates.empty()
                        ? 0.0
                        : static_cast<double>(kept.size()) / static_cast<double>(d.estimates.size());
  if (!kept.empty()) {
    d.mean = mean(kept);
    d.std = sample_stddev(kept);
  }
  return d;
}

struct NmleConfig {
  std::size_t initial_conditions = 100;
  std::size_t perturbations = 5;
  double epsilon = 1e-8;
  GDConfig gd{1.0, 1000, 1};
  WindowSearch search;
  LossKind loss = LossKind::binary;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// Lambda for one initial condition: init, ensemble, window fit.
inline ExponentEstimate initial_condition_exponent(const NetworkArchitecture& arch,
                                                   const Dataset& data, const NmleConfig& cfg,
                                                   std::size_t ic) {
  const WeightSet w0 = init_weights(arch, derive_seed(cfg.seed, "init", ic));
  PerturbationSpec spec;
  spec.epsilon = cfg.epsilon;
  spec.count = cfg.perturbations;
  spec.seed = derive_seed(cfg.seed, "perturb", ic);
  EnsembleOptions opts;
  opts.loss = cfg.loss;
  const auto ens = run_ensemble(w0, spec, cfg.gd, data, opts);
  std::vector<DistanceSeries> live;
  const std::size_t full = ens.reference.loss.size();
  for (std::size_t j = 0; j < ens.members.size(); ++j) {
    if (!ens.members[j].diverged()) live.push_back(ens.distances[j]);
  }
  ExponentEstimate e;
  if (!live.empty() && full > 1) {
    const DistanceSeries mean_curve = mean_distance(live);
    e = estimate_exponent(live, mean_curve, cfg.search);
  }
  e.initial_condition_id = ic;
  return e;
}

/// Distribution of Lambda over seeded initial conditions; lambda_nMLE is its
/// mean over accepted estimates.
inline ExponentDistribution nmle_pipeline(const NetworkArchitecture& arch, const Dataset& data,
                                          const NmleConfig& cfg) {
  if (cfg.initial_conditions == 0 || cfg.perturbations == 0) {
    throw ConfigError("nmle needs at least one initial condition and one perturbation");
  }
  std::vector<ExponentEstimate> est(cfg.initial_conditions);
  parallel_for(cfg.initial_conditions, cfg.workers, [&](std::size_t ic) {
    est[ic] = initial_condition_exponent(arch, data, cfg, ic);
  });
  return summarize(std::move(est));
}

}  // namespace netdyn
