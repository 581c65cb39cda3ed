#pragma once

// Trajectory files.
//
// Binary container, all integers and floats little-endian:
//
//   magic        8 bytes  "NDTRAJ01"
//   layers       u32      L
//   layer sizes  L x u64
//   eta          f64
//   iterations   u64
//   stride       u64
//   seed         u64
//   loss kind    u32      0 binary, 1 normalized, 2 true_class
//   frame count  u64
//   frames       frame count x (u64 iteration, P x f64 weights in canonical order)
//
// The scalar series go to CSV with columns
// iteration,loss,accuracy_train,accuracy_test,weight_norm_l1,weight_norm_l2.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <charconv>
#include <cstring>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "netdyn/architecture.hpp"
#include "netdyn/error.hpp"
#include "netdyn/gd.hpp"
#include "netdyn/network.hpp"
#include "netdyn/weights.hpp"

namespace netdyn {

inline constexpr char kTrajectoryMagic[8] = {'N', 'D', 'T', 'R', 'A', 'J', '0', '1'};

struct TrajectoryHeader {
  std::vector<std::size_t> layer_sizes;
  GDConfig config;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::binary;
};

struct TrajectoryFile {
  TrajectoryHeader header;
  std::vector<Snapshot> frames;
};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError("truncated trajectory file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated trajectory file");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline std::uint32_t loss_code(LossKind k) {
  switch (k) {
    case LossKind::binary: return 0;
    case LossKind::normalized: return 1;
    case LossKind::true_class: return 2;
  }
  return 0;
}

}  // namespace detail

inline void write_trajectory(std::ostream& out, const TrajectoryHeader& header,
                             const std::vector<Snapshot>& frames) {
  out.write(kTrajectoryMagic, sizeof kTrajectoryMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(header.layer_sizes.size()));
  for (std::size_t s : header.layer_sizes) detail::put_u64(out, s);
  detail::put_f64(out, header.config.eta);
  detail::put_u64(out, header.config.iterations);
  detail::put_u64(out, header.config.snapshot_stride);
  detail::put_u64(out, header.seed);
  detail::put_u32(out, detail::loss_code(header.loss));
  detail::put_u64(out, frames.size());
  for (const auto& f : frames) {
    detail::put_u64(out, f.iteration);
    for (double v : f.weights.flat()) detail::put_f64(out, v);
  }
  if (!out) throw Error("failed writing trajectory");
}

inline void write_trajectory(const std::string& path, const TrajectoryHeader& header,
                             const std::vector<Snapshot>& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_trajectory(out, header, frames);
}

inline TrajectoryFile read_trajectory(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kTrajectoryMagic, 8) != 0) {
    throw ParseError("not a trajectory file (bad magic)");
  }
  TrajectoryFile f;
  const std::uint32_t layers = detail::get_u32(in);
  if (layers < 3 || layers > 64) throw ParseError("implausible layer count in trajectory file");
  for (std::uint32_t k = 0; k < layers; ++k) f.header.layer_sizes.push_back(detail::get_u64(in));
  f.header.config.eta = detail::get_f64(in);
  f.header.config.iterations = detail::get_u64(in);
  f.header.config.snapshot_stride = detail::get_u64(in);
  f.header.seed = detail::get_u64(in);
  const std::uint32_t code = detail::get_u32(in);
  if (code > 2) throw ParseError("unknown loss code in trajectory file");
  f.header.loss = code == 0 ? LossKind::binary : code == 1 ? LossKind::normalized : LossKind::true_class;
  const NetworkArchitecture arch(f.header.layer_sizes, Activation::sigmoid);
  const std::uint64_t count = detail::get_u64(in);
  std::vector<double> buf(arch.parameter_count());
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::uint64_t t = detail::get_u64(in);
    for (double& v : buf) v = detail::get_f64(in);
    f.frames.push_back({static_cast<std::size_t>(t), WeightSet::unflatten(arch, buf)});
  }
  return f;
}

inline TrajectoryFile read_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  return read_trajectory(in);
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Scalar series as CSV. accuracy_test is left empty without eval data.
inline void write_series_csv(std::ostream& out, const Trajectory& traj) {
  out << "iteration,loss,accuracy_train,accuracy_test,weight_norm_l1,weight_norm_l2\n";
  for (std::size_t t = 0; t < traj.loss.size(); ++t) {
    out << t << ',' << format_double(traj.loss[t]) << ',' << format_double(traj.accuracy_train[t]) << ',';
    if (t < traj.accuracy_test.size()) out << format_double(traj.accuracy_test[t]);
    out << ',' << format_double(traj.norm_l1[t]) << ',' << format_double(traj.norm_l2[t]) << '\n';
  }
}

}  // namespace netdyn
