#pragma once

// Dataset loading (CSV, IDX), seeded splits and z-scoring.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "netdyn/dataset.hpp"
#include "netdyn/error.hpp"
#include "netdyn/rng.hpp"

namespace netdyn {

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

}  // namespace detail

/// Labelled CSV: numeric feature columns followed by a label column. A first
/// line whose features do not parse as numbers is treated as a header. Labels
/// that are all non-negative integers are used as class indices; otherwise
/// names are mapped to indices in order of first appearance.
inline Dataset load_labeled_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() < 2) throw ParseError(path + ":" + std::to_string(line_no) + ": expected features and a label");
    std::vector<double> row;
    bool numeric = true;
    for (std::size_t k = 0; k + 1 < fields.size(); ++k) {
      const auto v = detail::parse_double(fields[k]);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      if (rows.empty() && raw_labels.empty() && line_no == 1) continue;  // header
      throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric feature");
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                       " features, found " + std::to_string(row.size()));
    }
    if (fields.back().empty()) throw ParseError(path + ":" + std::to_string(line_no) + ": empty label");
    rows.push_back(std::move(row));
    raw_labels.push_back(fields.back());
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");

  std::vector<int> labels;
  std::vector<std::string> names;
  bool integer_labels = true;
  for (const auto& s : raw_labels) {
    const auto v = detail::parse_int(s);
    if (!v || *v < 0) {
      integer_labels = false;
      break;
    }
    labels.push_back(*v);
  }
  if (integer_labels) {
    const int top = *std::max_element(labels.begin(), labels.end());
    for (int k = 0; k <= top; ++k) names.push_back(std::to_string(k));
  } else {
    labels.clear();
    std::map<std::string, int> index;
    for (const auto& s : raw_labels) {
      auto [it, added] = index.emplace(s, static_cast<int>(names.size()));
      if (added) names.push_back(s);
      labels.push_back(it->second);
    }
  }
  Dataset d = Dataset::from_rows(rows, labels, names.size());
  d.class_names = std::move(names);
  return d;
}

/// Iris in CSV form (4 features, species label).
inline Dataset load_iris(const std::string& path) { return load_labeled_csv(path); }

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Seeded subset of `count` indices out of [0, n), sorted ascending.
inline std::vector<std::size_t> subset_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  if (count > n) throw ConfigError("subset of " + std::to_string(count) + " from " + std::to_string(n) + " samples");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "subset", 0));
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// MNIST-style IDX image and label files. Pixels are scaled by 1/255.
/// subset_size = 0 keeps every sample; otherwise a seeded subset without
/// replacement, kept in file order.
inline Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                              std::size_t subset_size = 0, std::uint64_t seed = 0) {
  const auto img = detail::read_file(images_path);
  const auto lab = detail::read_file(labels_path);
  if (img.size() < 16) throw ParseError(images_path + ": truncated IDX header");
  if (lab.size() < 8) throw ParseError(labels_path + ": truncated IDX header");
  if (detail::read_be32(img, 0) != kIdxImagesMagic) throw ParseError(images_path + ": bad IDX image magic");
  if (detail::read_be32(lab, 0) != kIdxLabelsMagic) throw ParseError(labels_path + ": bad IDX label magic");
  const std::size_t n = detail::read_be32(img, 4);
  const std::size_t rows = detail::read_be32(img, 8);
  const std::size_t cols = detail::read_be32(img, 12);
  const std::size_t n_labels = detail::read_be32(lab, 4);
  if (n != n_labels) {
    throw ParseError("image count " + std::to_string(n) + " does not match label count " + std::to_string(n_labels));
  }
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + n * pixels) throw ParseError(images_path + ": truncated image payload");
  if (lab.size() < 8 + n) throw ParseError(labels_path + ": truncated label payload");

  std::vector<std::size_t> keep;
  if (subset_size == 0) {
    keep.resize(n);
    std::iota(keep.begin(), keep.end(), std::size_t{0});
  } else {
    keep = subset_indices(n, subset_size, seed);
  }

  constexpr int kClasses = 10;
  Dataset d;
  const auto m = static_cast<Eigen::Index>(keep.size());
  d.inputs.resize(m, static_cast<Eigen::Index>(pixels));
  d.targets = Eigen::MatrixXd::Zero(m, kClasses);
  d.labels.reserve(keep.size());
  for (int k = 0; k < kClasses; ++k) d.class_names.push_back(std::to_string(k));
  for (Eigen::Index i = 0; i < m; ++i) {
    const std::size_t src = keep[static_cast<std::size_t>(i)];
    const unsigned char* p = img.data() + 16 + src * pixels;
    for (std::size_t j = 0; j < pixels; ++j) d.inputs(i, static_cast<Eigen::Index>(j)) = p[j] / 255.0;
    const int label = lab[8 + src];
    if (label >= kClasses) throw ParseError(labels_path + ": label " + std::to_string(label) + " out of range");
    d.labels.push_back(label);
    d.targets(i, label) = 1.0;
  }
  return d;
}

struct SplitSpec {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Disjoint train/test index sets, each sorted. Stratified splits give every
/// class a share of n_train proportional to its size (largest remainder, ties
/// to the lower class index); the test set is drawn from what remains in the
/// same way.
inline SplitIndices split_indices(const Dataset& data, const SplitSpec& spec) {
  const std::size_t n = data.size();
  if (spec.n_train + spec.n_test > n) {
    throw ConfigError("split needs " + std::to_string(spec.n_train + spec.n_test) + " samples, dataset has " +
                      std::to_string(n));
  }
  SplitIndices out;
  Rng rng(derive_seed(spec.seed, "split", 0));
  if (!spec.stratified) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    shuffle(idx, rng);
    out.train.assign(idx.begin(), idx.begin() + static_cast<long>(spec.n_train));
    out.test.assign(idx.begin() + static_cast<long>(spec.n_train),
                    idx.begin() + static_cast<long>(spec.n_train + spec.n_test));
  } else {
    const std::size_t classes = std::max<std::size_t>(data.class_count(), 1);
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
    for (auto& c : by_class) shuffle(c, rng);

    const auto allocate = [&](std::size_t total, const std::vector<std::size_t>& avail) {
      std::vector<std::size_t> take(classes, 0);
      const std::size_t pool = std::accumulate(avail.begin(), avail.end(), std::size_t{0});
      if (total == 0 || pool == 0) return take;
      std::vector<std::pair<double, std::size_t>> rem;
      std::size_t given = 0;
      for (std::size_t c = 0; c < classes; ++c) {
        const double exact = static_cast<double>(total) * static_cast<double>(avail[c]) / static_cast<double>(pool);
        take[c] = std::min(avail[c], static_cast<std::size_t>(std::floor(exact)));
        given += take[c];
        rem.emplace_back(exact - std::floor(exact), c);
      }
      std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      for (std::size_t k = 0; given < total && k < rem.size(); ++k) {
        const std::size_t c = rem[k].second;
        if (take[c] < avail[c]) {
          ++take[c];
          ++given;
        }
      }
      if (given < total) throw ConfigError("infeasible stratified split");
      return take;
    };

    std::vector<std::size_t> avail(classes);
    for (std::size_t c = 0; c < classes; ++c) avail[c] = by_class[c].size();
    const auto train_take = allocate(spec.n_train, avail);
    for (std::size_t c = 0; c < classes; ++c) avail[c] -= train_take[c];
    const auto test_take = allocate(spec.n_test, avail);
    for (std::size_t c = 0; c < classes; ++c) {
      const auto& ids = by_class[c];
      out.train.insert(out.train.end(), ids.begin(), ids.begin() + static_cast<long>(train_take[c]));
      out.test.insert(out.test.end(), ids.begin() + static_cast<long>(train_take[c]),
                      ids.begin() + static_cast<long>(train_take[c] + test_take[c]));
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
  const auto idx = split_indices(data, spec);
  return {data.select(idx.train), data.select(idx.test)};
}

struct Standardization {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd std;                   // population std of the training features
  std::vector<std::size_t> constant_features;  // passed through unchanged
  std::vector<std::string> warnings;
};

/// Z-scores both sets in place with the training statistics. Features with
/// zero training variance are left untouched and reported.
inline Standardization standardize(Dataset& train, Dataset& test) {
  if (train.empty()) throw DimensionError("cannot standardize an empty training set");
  if (!test.empty() && test.feature_count() != train.feature_count()) {
    throw DimensionError("train and test feature counts differ");
  }
  Standardization s;
  const auto n = static_cast<double>(train.size());
  s.mean = train.inputs.colwise().sum() / n;
  s.std.resize(train.inputs.cols());
  for (Eigen::Index j = 0; j < train.inputs.cols(); ++j) {
    const double var = (train.inputs.col(j).array() - s.mean(j)).square().sum() / n;
    s.std(j) = std::sqrt(var);
    if (!(s.std(j) > 0.0)) {
      s.constant_features.push_back(static_cast<std::size_t>(j));
      s.warnings.push_back("feature " + std::to_string(j) + " is constant on the training set; left unscaled");
      continue;
    }
    train.inputs.col(j) = (train.inputs.col(j).array() - s.mean(j)) / s.std(j);
    if (!test.empty()) test.inputs.col(j) = (test.inputs.col(j).array() - s.mean(j)) / s.std(j);
  }
  return s;
}

}  // namespace netdyn
