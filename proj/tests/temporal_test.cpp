#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cerfuse/ingest.hpp"
#include "cerfuse/temporal.hpp"
#include "oracles.hpp"

namespace cerfuse {
namespace {

TEST(FrameCountTest, Examples) {
  EXPECT_EQ(frame_count(10.0, 25.0), 250u);
  EXPECT_EQ(frame_count(0.1, 25.0), 3u);  // t = 0, 0.04, 0.08
  EXPECT_EQ(frame_count(0.12, 25.0), 3u);
  EXPECT_EQ(frame_count(1.0, 30.0), 30u);
}

TEST(BroadcastTest, OverlapIsAveraged) {
  auto s = make_space({"A", "B"});
  std::vector<TimedPrediction> segs{{0, 4, ProbVector({1, 0}, s)}, {2, 6, ProbVector({0, 1}, s)}};
  auto track = broadcast_and_average(segs, 1.0, 6.0, "v");
  ASSERT_EQ(track.frames.size(), 6u);
  EXPECT_EQ(track.frames[1].probs[0], 1.0);
  EXPECT_EQ(track.frames[1].count, 1u);
  EXPECT_EQ(track.frames[2].probs[0], 0.5);
  EXPECT_EQ(track.frames[3].count, 2u);
  EXPECT_EQ(track.frames[4].probs[1], 1.0);
  auto labels = frame_labels(track);
  EXPECT_EQ(labels[0].second, "A");
  EXPECT_EQ(labels[5].second, "B");
}

TEST(BroadcastTest, SingleSegmentIsCopied) {
  auto s = make_space({"A", "B", "C"});
  std::vector<TimedPrediction> segs{{0, 3, ProbVector({0.2, 0.3, 0.5}, s)}};
  auto track = broadcast_and_average(segs, 25.0, 3.0);
  EXPECT_EQ(track.frames.size(), 75u);
  for (const auto& f : track.frames) EXPECT_EQ(oracle::vec(f.probs.values()), oracle::vec(segs[0].probs.values()));
}

TEST(BroadcastTest, Errors) {
  auto s = make_space({"A", "B"});
  auto code = [&](std::vector<TimedPrediction> segs, double d) {
    try {
      broadcast_and_average(segs, 1.0, d);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code({}, 4.0), ErrorCode::kEmptyInput);
  EXPECT_EQ(code({{0, 2, ProbVector({1, 0}, s)}, {3, 5, ProbVector({1, 0}, s)}}, 5.0), ErrorCode::kUncoveredFrame);
  EXPECT_EQ(code({{0, 2, ProbVector({1, 0}, s)}, {0, 2, ProbVector({1, 0}, make_space({"A", "C"}))}}, 2.0),
            ErrorCode::kDimensionMismatch);
}

TEST(BroadcastTest, RandomGridsStayOnSimplexAndInsideHull) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> cs(50, 6000);
  auto s = EmotionSpace::default_basic();
  for (int trial = 0; trial < 60; ++trial) {
    double d = cs(rng) / 100.0;
    std::vector<TimedPrediction> segs;
    for (const auto& g : segment_grid(d)) segs.push_back({g.start_s, g.end_s, ProbVector(oracle::random_simplex(rng, 8), s)});
    auto track = broadcast_and_average(segs, 25.0, d);
    ASSERT_EQ(track.frames.size(), frame_count(d, 25.0));
    for (const auto& f : track.frames) {
      double t = static_cast<double>(f.frame) / 25.0;
      double sum = 0;
      for (std::size_t c = 0; c < 8; ++c) {
        double lo = 1, hi = 0;
        for (const auto& sg : segs) {
          if (sg.start_s <= t + 1e-9 && t + 1e-9 < sg.end_s) {
            lo = std::min(lo, sg.probs[c]);
            hi = std::max(hi, sg.probs[c]);
          }
        }
        EXPECT_GE(f.probs[c], lo - 1e-12);
        EXPECT_LE(f.probs[c], hi + 1e-12);
        sum += f.probs[c];
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
      EXPECT_GE(f.count, 1u);
      EXPECT_LE(f.count, 3u);  // the tail window can add a third
    }
  }
}

TEST(FormatFramesTest, OneLinePerFrame) {
  auto s = make_space({"A", "B"});
  std::vector<TimedPrediction> segs{{0, 2, ProbVector({0.25, 0.75}, s)}};
  auto text = format_frames(broadcast_and_average(segs, 2.0, 2.0, "clip"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_NE(text.find("\"video_id\":\"clip\""), std::string::npos);
  EXPECT_NE(text.find("\"label\":\"B\""), std::string::npos);
}

}  // namespace
}  // namespace cerfuse
