#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace netdyn;
using netdyn::testing::iris;

TEST(TrajectoryFile, RoundTrip) {
  const NetworkArchitecture arch({4, 10, 3}, Activation::sigmoid);
  const auto traj = train(init_weights(arch, 3), {0.5, 20, 5}, iris());
  TrajectoryHeader h{arch.layer_sizes(), {0.5, 20, 5}, 3, LossKind::normalized};
  std::stringstream buf;
  write_trajectory(buf, h, traj.snapshots);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 8), "NDTRAJ01");
  EXPECT_EQ(bytes.size(), 8 + 4 + 3 * 8 + 8 + 8 + 8 + 8 + 4 + 8 + traj.snapshots.size() * (8 + 83 * 8));

  const auto f = read_trajectory(buf);
  EXPECT_EQ(f.header.layer_sizes, arch.layer_sizes());
  EXPECT_EQ(f.header.config.eta, 0.5);
  EXPECT_EQ(f.header.config.snapshot_stride, 5u);
  EXPECT_EQ(f.header.seed, 3u);
  EXPECT_EQ(f.header.loss, LossKind::normalized);
  ASSERT_EQ(f.frames.size(), traj.snapshots.size());
  for (std::size_t k = 0; k < f.frames.size(); ++k) {
    EXPECT_EQ(f.frames[k].iteration, traj.snapshots[k].iteration);
    EXPECT_TRUE(f.frames[k].weights == traj.snapshots[k].weights);
  }
}

TEST(TrajectoryFile, LittleEndianLayout) {
  const NetworkArchitecture arch({1, 1, 1}, Activation::sigmoid);
  WeightSet w(arch);
  w[0] = 1.0;
  std::stringstream buf;
  write_trajectory(buf, {arch.layer_sizes(), {0.1, 1, 1}, 0, LossKind::binary}, {{7, w}});
  const std::string b = buf.str();
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 3u);  // layer count, low byte first
  const std::size_t frame = 8 + 4 + 24 + 32 + 4 + 8;
  EXPECT_EQ(static_cast<unsigned char>(b[frame]), 7u);
  // 1.0 = 0x3FF0000000000000: the high byte comes last.
  EXPECT_EQ(static_cast<unsigned char>(b[frame + 8 + 7]), 0x3Fu);
  EXPECT_EQ(static_cast<unsigned char>(b[frame + 8 + 6]), 0xF0u);
}

TEST(TrajectoryFile, RejectsGarbage) {
  std::stringstream bad("NOTATRAJECTORY");
  EXPECT_THROW(read_trajectory(bad), ParseError);
  const NetworkArchitecture arch({1, 1, 1}, Activation::sigmoid);
  std::stringstream buf;
  write_trajectory(buf, {arch.layer_sizes(), {0.1, 1, 1}, 0, LossKind::binary}, {{0, WeightSet(arch)}});
  std::stringstream cut(buf.str().substr(0, buf.str().size() - 3));
  EXPECT_THROW(read_trajectory(cut), ParseError);
}

TEST(SeriesCsv, ColumnsAndRoundTripPrecision) {
  const NetworkArchitecture arch({4, 10, 3}, Activation::sigmoid);
  const auto [tr, te] = split(iris(), {120, 30, 1, true});
  TrainOptions opts;
  opts.eval_data = &te;
  const auto traj = train(init_weights(arch, 1), {0.01, 3, 1}, tr, opts);
  std::ostringstream out;
  write_series_csv(out, traj);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,loss,accuracy_train,accuracy_test,weight_norm_l1,weight_norm_l2");
  std::getline(in, line);
  const std::string loss_text = line.substr(2, line.find(',', 2) - 2);
  EXPECT_EQ(std::stod(loss_text), traj.loss[0]);
  std::size_t rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4u);
}
