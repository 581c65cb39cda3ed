#pragma once

// Config-driven experiments: parsing and validation of the JSON experiment
// description, and a runner that writes the result tables of one experiment
// kind into an output directory.
//
// Relative paths in a config are resolved against the directory holding the
// config file. The resolved form (absolute paths, every default filled in) is
// what to_json() emits and what a manifest records.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "acf.hpp"
#include "data_io.hpp"
#include "diagnostics.hpp"
#include "gd.hpp"
#include "kantz.hpp"
#include "lyapunov.hpp"
#include "perturbation.hpp"
#include "segments.hpp"
#include "trajectory_io.hpp"

namespace netdyn {

enum class ExperimentKind {
  train,
  ensemble,
  post_perturb,
  eps_sweep,
  nmle,
  ablation,
  weight_diag,
  acf,
  kantz,
  segments
};

inline const std::vector<std::pair<ExperimentKind, std::string>>& experiment_kind_names() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names = {
      {ExperimentKind::train, "train"},           {ExperimentKind::ensemble, "ensemble"},
      {ExperimentKind::post_perturb, "post_perturb"}, {ExperimentKind::eps_sweep, "eps_sweep"},
      {ExperimentKind::nmle, "nmle"},             {ExperimentKind::ablation, "ablation"},
      {ExperimentKind::weight_diag, "weight_diag"}, {ExperimentKind::acf, "acf"},
      {ExperimentKind::kantz, "kantz"},           {ExperimentKind::segments, "segments"}};
  return names;
}

inline std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : experiment_kind_names()) {
    if (kind == k) return name;
  }
  return "?";
}

struct DatasetConfig {
  std::string format = "csv";  // csv | mnist_idx
  std::string path;            // csv
  std::string images;          // mnist_idx
  std::string labels;          // mnist_idx
  std::size_t subset = 0;      // mnist_idx: 0 keeps every sample
  std::size_t n_train = 0;     // 0 with n_test 0: no split, train on everything
  std::size_t n_test = 0;
  bool stratified = true;
  bool standardize = false;
};

struct PerturbationConfig {
  double epsilon = 1e-8;
  std::size_t count = 20;
  std::size_t mask_size = 0;  // 0 perturbs every parameter
  std::size_t at_iteration = 0;
  bool include_biases = true;
  std::vector<double> epsilons;  // eps_sweep only
};

/// Which part of the loss series the scalar diagnostics look at.
enum class SeriesSegment { all, longest_irregular };

struct AnalysisConfig {
  WindowSearch fit;
  std::size_t initial_conditions = 100;
  std::size_t burn_in = 0;
  SeriesSegment segment = SeriesSegment::all;
  std::size_t max_lag = 50;
  std::size_t n_shuffles = 1000;
  double alpha = 0.05;
  KantzParams kantz;
  SegmentOptions segments;
  bool save_trajectory = true;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::train;
  DatasetConfig dataset;
  std::vector<std::size_t> layers;
  GDConfig gd;
  LossKind loss = LossKind::binary;
  PerturbationConfig perturbation;
  AnalysisConfig analysis;
  std::uint64_t seed = 0;
  std::string output_dir;
};

namespace detail {

// Typed access to one JSON object; remembers which keys were read so that
// leftovers can be reported as unknown.
class Fields {
 public:
  Fields(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  Fields object(const std::string& key) {
    used_.insert(key);
    static const nlohmann::json empty = nlohmann::json::object();
    return Fields(j_.contains(key) ? j_.at(key) : empty, name(key));
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!present(key, fallback.has_value())) return *fallback;
    const auto& v = raw(key);
    if (!v.is_string()) throw ConfigError(name(key) + ": expected a string");
    return v.get<std::string>();
  }

  double real(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!present(key, fallback.has_value())) return *fallback;
    return as_real(raw(key), name(key));
  }

  std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
    if (!present(key, fallback.has_value())) return *fallback;
    return as_integer(raw(key), name(key));
  }

  // Absent keeps the fallback; an explicit null clears it.
  std::optional<std::uint64_t> optional_integer(const std::string& key, std::optional<std::uint64_t> fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (j_.at(key).is_null()) return std::nullopt;
    return as_integer(j_.at(key), name(key));
  }

  bool flag(const std::string& key, bool fallback) {
    if (!present(key, true)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(name(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::vector<std::size_t> integer_list(const std::string& key) {
    present(key, false);
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(name(key) + ": expected a list of integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_integer(v[i], name(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  std::vector<double> real_list(const std::string& key) {
    if (!present(key, true)) return {};
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(name(key) + ": expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_real(v[i], name(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  /// Rejects keys that were never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(name(it.key()) + ": unknown key");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }

  bool present(const std::string& key, bool optional) {
    used_.insert(key);
    if (has(key)) return true;
    if (!optional) throw ConfigError(name(key) + ": required");
    return false;
  }

  static double as_real(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigError(field + ": expected a number");
    return v.get<double>();
  }

  static std::uint64_t as_integer(const nlohmann::json& v, const std::string& field) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw ConfigError(field + ": must be non-negative");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw ConfigError(field + ": expected an integer");
  }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

inline bool uses_fit(ExperimentKind k) {
  return k == ExperimentKind::ensemble || k == ExperimentKind::post_perturb ||
         k == ExperimentKind::eps_sweep || k == ExperimentKind::nmle;
}

inline bool uses_perturbation(ExperimentKind k) { return uses_fit(k); }

inline bool is_series_kind(ExperimentKind k) {
  return k == ExperimentKind::acf || k == ExperimentKind::kantz || k == ExperimentKind::segments;
}

}  // namespace detail

/// Parses an experiment description. Unknown keys, wrong types and values
/// outside their domain raise ConfigError naming the field.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using detail::Fields;
  ExperimentConfig c;
  Fields top(j, "");

  const std::string kind = top.text("kind");
  bool known = false;
  for (const auto& [k, name] : experiment_kind_names()) {
    if (name == kind) {
      c.kind = k;
      known = true;
    }
  }
  if (!known) throw ConfigError("kind: unknown experiment kind '" + kind + "'");
  c.seed = top.integer("seed", 0);
  c.output_dir = detail::resolve_path(top.text("output_dir", ""), base_dir);

  {
    Fields d = top.object("dataset");
    c.dataset.format = d.text("format", "csv");
    if (c.dataset.format == "csv") {
      c.dataset.path = detail::resolve_path(d.text("path"), base_dir);
    } else if (c.dataset.format == "mnist_idx") {
      c.dataset.images = detail::resolve_path(d.text("images"), base_dir);
      c.dataset.labels = detail::resolve_path(d.text("labels"), base_dir);
      c.dataset.subset = d.integer("subset", 0);
    } else {
      throw ConfigError("dataset.format: expected 'csv' or 'mnist_idx'");
    }
    c.dataset.n_train = d.integer("n_train", 0);
    c.dataset.n_test = d.integer("n_test", 0);
    c.dataset.stratified = d.flag("stratified", true);
    c.dataset.standardize = d.flag("standardize", false);
    if ((c.dataset.n_train == 0) != (c.dataset.n_test == 0)) {
      throw ConfigError("dataset.n_train, dataset.n_test: give both or neither");
    }
    d.finish();
  }
  {
    Fields a = top.object("architecture");
    c.layers = a.integer_list("layers");
    if (a.text("activation", "sigmoid") != "sigmoid") {
      throw ConfigError("architecture.activation: only 'sigmoid' is supported");
    }
    try {
      NetworkArchitecture(c.layers, Activation::sigmoid);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("architecture.layers: ") + e.what());
    }
    a.finish();
  }
  {
    Fields g = top.object("gd");
    c.gd.eta = g.real("eta", 0.01);
    c.gd.iterations = g.integer("iterations", 1000);
    c.gd.snapshot_stride = g.integer("stride", 1);
    try {
      c.loss = parse_loss_kind(g.text("loss", "binary"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("gd.loss: ") + e.what());
    }
    if (!(c.gd.eta > 0.0) || !std::isfinite(c.gd.eta)) throw ConfigError("gd.eta: must be positive and finite");
    if (c.gd.snapshot_stride == 0) throw ConfigError("gd.stride: must be positive");
    g.finish();
  }
  if (detail::uses_perturbation(c.kind)) {
    Fields p = top.object("perturbation");
    auto& pc = c.perturbation;
    pc.epsilon = p.real("epsilon", 1e-8);
    pc.count = p.integer("count", c.kind == ExperimentKind::nmle ? 5 : 20);
    pc.mask_size = p.integer("mask_size", 0);
    pc.include_biases = p.flag("include_biases", true);
    if (c.kind == ExperimentKind::post_perturb) pc.at_iteration = p.integer("at_iteration", 4000);
    if (c.kind == ExperimentKind::eps_sweep) {
      pc.epsilons = p.real_list("epsilons");
      if (pc.epsilons.empty()) throw ConfigError("perturbation.epsilons: required and non-empty");
      for (double e : pc.epsilons) {
        if (!(e > 0.0)) throw ConfigError("perturbation.epsilons: every value must be positive");
      }
    }
    if (!(pc.epsilon > 0.0)) throw ConfigError("perturbation.epsilon: must be positive");
    if (pc.count == 0) throw ConfigError("perturbation.count: must be positive");
    const std::size_t params = NetworkArchitecture(c.layers, Activation::sigmoid).parameter_count();
    if (pc.mask_size > params) {
      throw ConfigError("perturbation.mask_size: exceeds the parameter count " + std::to_string(params));
    }
    if (pc.mask_size > 0 && !pc.include_biases) {
      throw ConfigError("perturbation.include_biases: cannot be combined with mask_size");
    }
    p.finish();
  } else if (top.has("perturbation")) {
    throw ConfigError("perturbation: not used by kind '" + kind + "'");
  }

  Fields an = top.object("analysis");
  auto& ac = c.analysis;
  if (detail::uses_fit(c.kind)) {
    ac.fit.min_window = an.integer("min_window", ac.fit.min_window);
    ac.fit.horizon = an.integer("horizon", ac.fit.horizon);
    ac.fit.max_start = an.optional_integer("max_start", ac.fit.max_start);
    ac.fit.min_slope = an.real("min_slope", ac.fit.min_slope);
    if (ac.fit.min_window == 0) throw ConfigError("analysis.min_window: must be positive");
  }
  if (c.kind == ExperimentKind::nmle) {
    ac.initial_conditions = an.integer("initial_conditions", 100);
    if (ac.initial_conditions == 0) throw ConfigError("analysis.initial_conditions: must be positive");
  }
  if (c.kind == ExperimentKind::train) ac.save_trajectory = an.flag("save_trajectory", true);
  if (detail::is_series_kind(c.kind)) {
    ac.burn_in = an.integer("burn_in", 0);
    if (ac.burn_in > c.gd.iterations) throw ConfigError("analysis.burn_in: exceeds gd.iterations");
    ac.segments.n_regions = an.integer("n_regions", ac.segments.n_regions);
    ac.segments.window = an.integer("window", ac.segments.window);
    ac.segments.tolerance = an.real("tolerance", ac.segments.tolerance);
    try {
      ac.segments.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("analysis: ") + e.what());
    }
  }
  if (c.kind == ExperimentKind::acf || c.kind == ExperimentKind::kantz) {
    const std::string seg = an.text("segment", "all");
    if (seg == "all") {
      ac.segment = SeriesSegment::all;
    } else if (seg == "longest_irregular") {
      ac.segment = SeriesSegment::longest_irregular;
    } else {
      throw ConfigError("analysis.segment: expected 'all' or 'longest_irregular'");
    }
  }
  if (c.kind == ExperimentKind::acf) {
    ac.max_lag = an.integer("max_lag", 50);
    ac.n_shuffles = an.integer("n_shuffles", 1000);
    ac.alpha = an.real("alpha", 0.05);
    if (ac.max_lag == 0) throw ConfigError("analysis.max_lag: must be positive");
    if (ac.n_shuffles == 0) throw ConfigError("analysis.n_shuffles: must be positive");
    if (!(ac.alpha > 0.0 && ac.alpha < 1.0)) throw ConfigError("analysis.alpha: must lie in (0, 1)");
  }
  if (c.kind == ExperimentKind::kantz) {
    auto& k = ac.kantz;
    k.embed_dim = an.integer("embed_dim", k.embed_dim);
    k.delay = an.integer("delay", k.delay);
    k.radius_fraction = an.real("radius_fraction", k.radius_fraction);
    k.theiler_window = an.integer("theiler_window", k.theiler_window);
    k.min_neighbors = an.integer("min_neighbors", k.min_neighbors);
    k.max_neighbors = an.integer("max_neighbors", k.max_neighbors);
    k.horizon = an.integer("horizon", k.horizon);
    k.fit_start = an.integer("fit_start", k.fit_start);
    k.fit_end = an.integer("fit_end", k.fit_end);
    k.n_anchors = an.integer("n_anchors", k.n_anchors);
    k.n_surrogates = an.integer("n_surrogates", k.n_surrogates);
    k.alpha = an.real("alpha", k.alpha);
    try {
      k.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("analysis: ") + e.what());
    }
  }
  if (c.kind == ExperimentKind::weight_diag && c.gd.snapshot_stride != 1) {
    throw ConfigError("gd.stride: weight_diag needs every iterate (stride 1)");
  }
  an.finish();
  top.finish();
  return c;
}

/// Reads and parses a config file; paths resolve against its directory.
inline ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return parse_config(j, std::filesystem::absolute(file).parent_path());
}

/// The fully resolved config; parse_config(to_json(c), any) == c.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json j;
  j["kind"] = to_string(c.kind);
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  json d;
  d["format"] = c.dataset.format;
  if (c.dataset.format == "csv") {
    d["path"] = c.dataset.path;
  } else {
    d["images"] = c.dataset.images;
    d["labels"] = c.dataset.labels;
    d["subset"] = c.dataset.subset;
  }
  d["n_train"] = c.dataset.n_train;
  d["n_test"] = c.dataset.n_test;
  d["stratified"] = c.dataset.stratified;
  d["standardize"] = c.dataset.standardize;
  j["dataset"] = d;
  j["architecture"] = {{"layers", c.layers}, {"activation", "sigmoid"}};
  j["gd"] = {{"eta", c.gd.eta},
             {"iterations", c.gd.iterations},
             {"stride", c.gd.snapshot_stride},
             {"loss", std::string(to_string(c.loss))}};
  if (detail::uses_perturbation(c.kind)) {
    const auto& p = c.perturbation;
    json pj = {{"epsilon", p.epsilon},
               {"count", p.count},
               {"mask_size", p.mask_size},
               {"include_biases", p.include_biases}};
    if (c.kind == ExperimentKind::post_perturb) pj["at_iteration"] = p.at_iteration;
    if (c.kind == ExperimentKind::eps_sweep) pj["epsilons"] = p.epsilons;
    j["perturbation"] = pj;
  }
  json a = json::object();
  const auto& ac = c.analysis;
  if (detail::uses_fit(c.kind)) {
    a["min_window"] = ac.fit.min_window;
    a["horizon"] = ac.fit.horizon;
    a["max_start"] = ac.fit.max_start ? json(*ac.fit.max_start) : json(nullptr);
    a["min_slope"] = ac.fit.min_slope;
  }
  if (c.kind == ExperimentKind::nmle) a["initial_conditions"] = ac.initial_conditions;
  if (c.kind == ExperimentKind::train) a["save_trajectory"] = ac.save_trajectory;
  if (detail::is_series_kind(c.kind)) {
    a["burn_in"] = ac.burn_in;
    a["n_regions"] = ac.segments.n_regions;
    a["window"] = ac.segments.window;
    a["tolerance"] = ac.segments.tolerance;
  }
  if (c.kind == ExperimentKind::acf || c.kind == ExperimentKind::kantz) {
    a["segment"] = ac.segment == SeriesSegment::all ? "all" : "longest_irregular";
  }
  if (c.kind == ExperimentKind::acf) {
    a["max_lag"] = ac.max_lag;
    a["n_shuffles"] = ac.n_shuffles;
    a["alpha"] = ac.alpha;
  }
  if (c.kind == ExperimentKind::kantz) {
    const auto& k = ac.kantz;
    a["embed_dim"] = k.embed_dim;
    a["delay"] = k.delay;
    a["radius_fraction"] = k.radius_fraction;
    a["theiler_window"] = k.theiler_window;
    a["min_neighbors"] = k.min_neighbors;
    a["max_neighbors"] = k.max_neighbors;
    a["horizon"] = k.horizon;
    a["fit_start"] = k.fit_start;
    a["fit_end"] = k.fit_end;
    a["n_anchors"] = k.n_anchors;
    a["n_surrogates"] = k.n_surrogates;
    a["alpha"] = k.alpha;
  }
  j["analysis"] = a;
  return j;
}

struct ExperimentData {
  NetworkArchitecture arch;
  Dataset train;
  Dataset test;  // empty without a split
  std::vector<std::string> warnings;
};

/// Loads and splits the dataset and checks it against the architecture.
/// Missing files and shape mismatches raise ConfigError.
inline ExperimentData prepare_data(const ExperimentConfig& c) {
  const auto& d = c.dataset;
  for (const auto& p : {d.path, d.images, d.labels}) {
    if (!p.empty() && !std::filesystem::is_regular_file(p)) {
      throw ConfigError("dataset: file not found: " + p);
    }
  }
  Dataset all = d.format == "csv" ? load_labeled_csv(d.path) : load_mnist_idx(d.images, d.labels, d.subset, c.seed);
  ExperimentData out{NetworkArchitecture(c.layers, Activation::sigmoid), {}, {}, {}};
  if (d.n_train > 0) {
    if (d.n_train + d.n_test > all.size()) {
      throw ConfigError("dataset: n_train + n_test exceeds the " + std::to_string(all.size()) + " samples");
    }
    auto parts = split(all, {d.n_train, d.n_test, c.seed, d.stratified});
    out.train = std::move(parts.first);
    out.test = std::move(parts.second);
  } else {
    out.train = std::move(all);
  }
  if (d.standardize) out.warnings = standardize(out.train, out.test).warnings;
  if (out.arch.input_size() != out.train.feature_count()) {
    throw ConfigError("architecture.layers: input size " + std::to_string(out.arch.input_size()) +
                      " does not match the " + std::to_string(out.train.feature_count()) + " dataset features");
  }
  if (out.arch.output_size() != out.train.class_count()) {
    throw ConfigError("architecture.layers: output size " + std::to_string(out.arch.output_size()) +
                      " does not match the " + std::to_string(out.train.class_count()) + " dataset classes");
  }
  return out;
}

/// Files written by one run, in creation order, plus the seeds handed to
/// each component.
struct ExperimentOutput {
  std::vector<std::string> files;
  std::map<std::string, std::uint64_t> seeds;
  nlohmann::json summary = nlohmann::json::object();
};

namespace detail {

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) {
      throw Error("cannot create output directory " + dir_.string());
    }
  }

  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& content, ExperimentOutput& out) const {
    std::ofstream f(path(name), std::ios::binary);
    f << content;
    if (!f) throw Error("cannot write " + path(name).string());
    out.files.push_back(name);
  }

 private:
  std::filesystem::path dir_;
};

inline std::string fmt(double v) { return format_double(v); }

inline std::string optional_loss(const std::vector<double>& loss, std::size_t t) {
  return t < loss.size() ? fmt(loss[t]) : "";
}

/// One row per (recorded iteration, member); member_id -1 holds the mean
/// distance and the mean member loss.
inline std::string distances_csv(const EnsembleResult& ens) {
  std::ostringstream s;
  s << "iteration,member_id,distance,loss_reference,loss_member\n";
  for (std::size_t k = 0; k < ens.mean_distance.size(); ++k) {
    const std::size_t t = ens.mean_distance.iterations[k];
    double loss_sum = 0.0;
    std::size_t live = 0;
    for (const auto& m : ens.members) {
      if (t < m.loss.size()) {
        loss_sum += m.loss[t];
        ++live;
      }
    }
    s << t << ",-1," << fmt(ens.mean_distance.values[k]) << ',' << optional_loss(ens.reference.loss, t) << ','
      << (live ? fmt(loss_sum / static_cast<double>(live)) : "") << '\n';
    for (std::size_t j = 0; j < ens.distances.size(); ++j) {
      const auto& dj = ens.distances[j];
      if (k >= dj.size()) continue;
      s << t << ',' << j << ',' << fmt(dj.values[k]) << ',' << optional_loss(ens.reference.loss, t) << ','
        << optional_loss(ens.members[j].loss, t) << '\n';
    }
  }
  return s.str();
}

inline std::string series_csv(const Trajectory& traj) {
  std::ostringstream s;
  write_series_csv(s, traj);
  return s.str();
}

inline nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json estimate_json(const ExponentEstimate& e) {
  return {{"lambda", json_number(e.lambda)}, {"t_start", e.t_start},       {"tau", e.tau},
          {"slope", json_number(e.slope)},   {"r_squared", json_number(e.r_squared)}, {"accepted", e.accepted}};
}

inline ExponentEstimate ensemble_exponent(const EnsembleResult& ens, const WindowSearch& search) {
  std::vector<DistanceSeries> live;
  for (std::size_t j = 0; j < ens.members.size(); ++j) {
    if (!ens.members[j].diverged()) live.push_back(ens.distances[j]);
  }
  if (live.empty()) return {};
  return estimate_exponent(live, mean_distance(live), search);
}

inline PerturbationSpec perturbation_spec(const ExperimentConfig& c, std::size_t parameter_count,
                                          ExperimentOutput& out) {
  PerturbationSpec spec;
  spec.epsilon = c.perturbation.epsilon;
  spec.count = c.perturbation.count;
  spec.include_biases = c.perturbation.include_biases;
  spec.seed = derive_seed(c.seed, "perturb", 0);
  out.seeds["perturb"] = spec.seed;
  if (c.perturbation.mask_size > 0) {
    const std::uint64_t mask_seed = derive_seed(c.seed, "mask", 0);
    out.seeds["mask"] = mask_seed;
    spec.mask = random_mask(parameter_count, c.perturbation.mask_size, mask_seed);
  }
  return spec;
}

inline nlohmann::json ensemble_summary(const EnsembleResult& ens, const PerturbationSpec& spec,
                                       const WindowSearch& search) {
  std::size_t absorbed = 0;
  for (std::size_t a : ens.absorbed) absorbed += a;
  std::size_t diverged = 0;
  for (const auto& m : ens.members) diverged += m.diverged();
  return {{"epsilon", spec.epsilon},
          {"count", spec.count},
          {"mask_size", spec.mask ? spec.mask->size() : 0},
          {"absorbed_components", absorbed},
          {"diverged_members", diverged},
          {"reference_diverged", ens.reference.diverged()},
          {"mean_distance_initial", json_number(ens.mean_distance.values.front())},
          {"mean_distance_final", json_number(ens.mean_distance.values.back())},
          {"fit", estimate_json(ensemble_exponent(ens, search))}};
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

/// Checks the config against its data without running anything.
inline ExperimentData validate_experiment(const ExperimentConfig& c) {
  ExperimentData data = prepare_data(c);
  if (c.kind == ExperimentKind::acf && c.analysis.segment == SeriesSegment::all) {
    const std::size_t n = c.gd.iterations + 1 - c.analysis.burn_in;
    if (2 * c.analysis.max_lag >= n) {
      throw ConfigError("analysis.max_lag: needs 2 * max_lag below the series length " + std::to_string(n));
    }
  }
  if (detail::is_series_kind(c.kind)) {
    const std::size_t n = c.gd.iterations + 1 - c.analysis.burn_in;
    if (n < 3 * c.analysis.segments.window) {
      throw ConfigError("gd.iterations: the analysed series needs at least 3 * window points");
    }
  }
  return data;
}

/// Runs one experiment and writes its tables into `dir`. Worker count never
/// changes the bytes written.
inline ExperimentOutput run_experiment(const ExperimentConfig& c, const std::filesystem::path& dir,
                                       std::size_t workers = 1) {
  const ExperimentData data = validate_experiment(c);
  const detail::OutputDir od(dir);
  ExperimentOutput out;
  const std::size_t params = data.arch.parameter_count();
  TrainOptions topts;
  topts.loss = c.loss;
  topts.eval_data = data.test.empty() ? nullptr : &data.test;

  const std::uint64_t init_seed = derive_seed(c.seed, "init", 0);
  if (c.kind != ExperimentKind::nmle) out.seeds["init"] = init_seed;
  const WeightSet w0 = init_weights(data.arch, init_seed);
  if (!data.warnings.empty()) out.summary["warnings"] = data.warnings;

  EnsembleOptions eopts;
  eopts.loss = c.loss;
  eopts.workers = workers;
  eopts.eval_data = topts.eval_data;

  switch (c.kind) {
    case ExperimentKind::train: {
      const Trajectory traj = train(w0, c.gd, data.train, topts);
      od.write("series.csv", detail::series_csv(traj), out);
      if (c.analysis.save_trajectory) {
        write_trajectory(od.path("trajectory.bin").string(), {data.arch.layer_sizes(), c.gd, init_seed, c.loss},
                         traj.snapshots);
        out.files.push_back("trajectory.bin");
      }
      out.summary["final_loss"] = detail::json_number(traj.loss.empty() ? NAN : traj.loss.back());
      out.summary["diverged_at"] = traj.diverged_at ? nlohmann::json(*traj.diverged_at) : nlohmann::json(nullptr);
      break;
    }
    case ExperimentKind::ensemble: {
      const PerturbationSpec spec = detail::perturbation_spec(c, params, out);
      const EnsembleResult ens = run_ensemble(w0, spec, c.gd, data.train, eopts);
      od.write("distances.csv", detail::distances_csv(ens), out);
      od.write("series.csv", detail::series_csv(ens.reference), out);
      out.summary = detail::ensemble_summary(ens, spec, c.analysis.fit);
      od.write("ensemble_summary.json", detail::dump(out.summary), out);
      break;
    }
    case ExperimentKind::post_perturb: {
      // Train to the perturbation point, then follow the ensemble from there;
      // iterations in the tables count from the perturbation.
      GDConfig pre = c.gd;
      pre.iterations = c.perturbation.at_iteration;
      pre.snapshot_stride = std::max<std::size_t>(1, c.perturbation.at_iteration);
      TrainOptions popts = topts;
      popts.eval_data = nullptr;
      const Trajectory warmup = train(w0, pre, data.train, popts);
      if (warmup.diverged()) throw DegenerateError("training diverged before the perturbation point");
      const PerturbationSpec spec = detail::perturbation_spec(c, params, out);
      const EnsembleResult ens = run_ensemble(warmup.final_weights(), spec, c.gd, data.train, eopts);
      od.write("distances.csv", detail::distances_csv(ens), out);
      od.write("series.csv", detail::series_csv(ens.reference), out);
      out.summary = detail::ensemble_summary(ens, spec, c.analysis.fit);
      out.summary["at_iteration"] = c.perturbation.at_iteration;
      out.summary["loss_at_perturbation"] = detail::json_number(warmup.loss.back());
      od.write("ensemble_summary.json", detail::dump(out.summary), out);
      break;
    }
    case ExperimentKind::eps_sweep: {
      // Every epsilon reuses the same perturbation stream, scaled.
      std::ostringstream table;
      table << "index,epsilon,mean_distance_initial,mean_distance_final,lambda,t_start,tau,r_squared,accepted\n";
      ExperimentConfig ci = c;
      for (std::size_t i = 0; i < c.perturbation.epsilons.size(); ++i) {
        ci.perturbation.epsilon = c.perturbation.epsilons[i];
        const PerturbationSpec spec = detail::perturbation_spec(ci, params, out);
        const EnsembleResult ens = run_ensemble(w0, spec, c.gd, data.train, eopts);
        od.write("distances_eps" + std::to_string(i) + ".csv", detail::distances_csv(ens), out);
        const ExponentEstimate e = detail::ensemble_exponent(ens, c.analysis.fit);
        table << i << ',' << detail::fmt(spec.epsilon) << ',' << detail::fmt(ens.mean_distance.values.front())
              << ',' << detail::fmt(ens.mean_distance.values.back()) << ',' << detail::fmt(e.lambda) << ','
              << e.t_start << ',' << e.tau << ',' << detail::fmt(e.r_squared) << ',' << (e.accepted ? 1 : 0)
              << '\n';
      }
      od.write("eps_summary.csv", table.str(), out);
      break;
    }
    case ExperimentKind::nmle: {
      if (c.perturbation.mask_size > 0 || !c.perturbation.include_biases) {
        throw ConfigError("perturbation: nmle perturbs every parameter");
      }
      NmleConfig cfg;
      cfg.initial_conditions = c.analysis.initial_conditions;
      cfg.perturbations = c.perturbation.count;
      cfg.epsilon = c.perturbation.epsilon;
      cfg.gd = c.gd;
      cfg.search = c.analysis.fit;
      cfg.loss = c.loss;
      cfg.seed = derive_seed(c.seed, "nmle", 0);
      cfg.workers = workers;
      out.seeds["nmle"] = cfg.seed;
      const ExponentDistribution dist = nmle_pipeline(data.arch, data.train, cfg);
      std::ostringstream s;
      s << "ic_id,lambda,tau,r_squared,accepted\n";
      for (const auto& e : dist.estimates) {
        s << e.initial_condition_id << ',' << detail::fmt(e.lambda) << ',' << e.tau << ','
          << detail::fmt(e.r_squared) << ',' << (e.accepted ? 1 : 0) << '\n';
      }
      od.write("lambda.csv", s.str(), out);
      out.summary = {{"eta", c.gd.eta},
                     {"epsilon", cfg.epsilon},
                     {"n_ic", cfg.initial_conditions},
                     {"m", cfg.perturbations},
                     {"mean", detail::json_number(dist.mean)},
                     {"std", detail::json_number(dist.std)},
                     {"kept_fraction", dist.kept_fraction},
                     {"accepted", dist.accepted_count},
                     {"seed", c.seed}};
      od.write("nmle_summary.json", detail::dump(out.summary), out);
      break;
    }
    case ExperimentKind::ablation: {
      const Trajectory traj = train(w0, c.gd, data.train, topts);
      if (traj.diverged()) throw DegenerateError("training diverged; nothing to ablate");
      const AblationResult ab = ablation_importance(traj.final_weights(), data.train, c.loss);
      const auto rel = ab.relative();
      std::ostringstream s;
      s << "param_index,layer,row,col,is_bias,w,ablation_delta,ablation_ratio\n";
      for (std::size_t p = 0; p < params; ++p) {
        const auto loc = traj.final_weights().locate(p);
        s << p << ',' << loc.layer << ',' << loc.row << ',' << loc.col << ',' << (loc.is_bias ? 1 : 0) << ','
          << detail::fmt(traj.final_weights()[p]) << ',' << detail::fmt(ab.delta[p]) << ',' << detail::fmt(rel[p])
          << '\n';
      }
      od.write("ablation.csv", s.str(), out);
      od.write("series.csv", detail::series_csv(traj), out);
      break;
    }
    case ExperimentKind::weight_diag: {
      const Trajectory traj = train(w0, c.gd, data.train, topts);
      if (traj.diverged()) throw DegenerateError("training diverged; diagnostics need a finite trajectory");
      const auto diag = weight_diagnostics(traj, data.train, c.loss);
      std::ostringstream s;
      s << "param_index,layer,row,col,is_bias,w0,wT,delta_w,d_w,ablation_delta,ablation_ratio\n";
      for (const auto& d : diag) {
        s << d.index << ',' << d.location.layer << ',' << d.location.row << ',' << d.location.col << ','
          << (d.location.is_bias ? 1 : 0) << ',' << detail::fmt(d.w0) << ',' << detail::fmt(d.wT) << ','
          << (d.displacement ? detail::fmt(*d.displacement) : "") << ',' << detail::fmt(d.path_length) << ','
          << detail::fmt(d.ablation_delta) << ',' << detail::fmt(d.ablation_relative) << '\n';
      }
      od.write("weight_diag.csv", s.str(), out);
      od.write("series.csv", detail::series_csv(traj), out);
      out.summary["drift_quadrant_count"] = drift_quadrant_count(diag);
      break;
    }
    case ExperimentKind::acf:
    case ExperimentKind::kantz:
    case ExperimentKind::segments: {
      TrainOptions sopts = topts;
      sopts.keep_snapshots = false;
      const Trajectory traj = train(w0, c.gd, data.train, sopts);
      od.write("series.csv", detail::series_csv(traj), out);
      if (traj.diverged()) throw DegenerateError("loss diverged at iteration " + std::to_string(*traj.diverged_at));
      const std::vector<double> series(traj.loss.begin() + static_cast<std::ptrdiff_t>(c.analysis.burn_in),
                                       traj.loss.end());
      const auto segs = flag_quasi_periodic(series, c.analysis.segments);
      std::size_t first = 0;
      std::size_t last = series.size();
      if (c.analysis.segment == SeriesSegment::longest_irregular && c.kind != ExperimentKind::segments) {
        const Segment* s = longest_segment(segs, SegmentClass::irregular);
        if (!s) throw DegenerateError("the loss series has no irregular segment");
        first = s->start;
        last = s->end;
      }
      const std::span<const double> x(series.data() + first, last - first);
      out.summary["offset"] = c.analysis.burn_in + first;
      out.summary["length"] = x.size();
      if (c.kind == ExperimentKind::segments) {
        std::ostringstream s;
        s << "start,end,class\n";
        for (const auto& seg : segs) {
          s << seg.start + c.analysis.burn_in << ',' << seg.end + c.analysis.burn_in << ','
            << to_string(seg.kind) << '\n';
        }
        od.write("segments.csv", s.str(), out);
      } else if (c.kind == ExperimentKind::acf) {
        ShuffleNullOptions so{c.analysis.n_shuffles, c.analysis.alpha, derive_seed(c.seed, "acf", 0), workers};
        out.seeds["acf"] = so.seed;
        const AcfResult r = shuffle_null(x, c.analysis.max_lag, so);
        std::ostringstream s;
        s << "lag,acf,null_low,null_high\n";
        for (std::size_t k = 0; k < r.acf.size(); ++k) {
          s << k << ',' << detail::fmt(r.acf[k]) << ',' << detail::fmt(r.null_low[k]) << ','
            << detail::fmt(r.null_high[k]) << '\n';
        }
        od.write("acf.csv", s.str(), out);
        out.summary["significant_lags"] = r.significant_lags();
      } else {
        KantzParams kp = c.analysis.kantz;
        kp.seed = derive_seed(c.seed, "kantz", 0);
        kp.workers = workers;
        out.seeds["kantz"] = kp.seed;
        const KantzResult r = kantz_expansion(x, kp);
        const std::size_t offset = c.analysis.burn_in + first;
        std::ostringstream s;
        s << "anchor,loss_at_anchor,lambda,p_value,significant\n";
        for (const auto& a : r.anchors) {
          s << a.index + offset << ',' << detail::fmt(x[a.index]) << ',' << detail::fmt(a.lambda) << ','
            << detail::fmt(a.p_value) << ',' << (a.significant ? 1 : 0) << '\n';
        }
        od.write("kantz.csv", s.str(), out);
        out.summary["significant_fraction"] = detail::json_number(r.significant_fraction());
        out.summary["mean_significant_lambda"] = detail::json_number(r.mean_significant_lambda());
        out.summary["skipped_anchors"] = r.skipped;
      }
      break;
    }
  }
  return out;
}

}  // namespace netdyn
