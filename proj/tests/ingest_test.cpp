#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "cerfuse/ingest.hpp"
#include "oracles.hpp"

namespace cerfuse {
namespace {

std::vector<Segment> segs(std::initializer_list<std::pair<double, double>> list) {
  std::vector<Segment> out;
  for (auto [a, b] : list) out.push_back({a, b});
  return out;
}

TEST(SegmentGridTest, Examples) {
  EXPECT_EQ(segment_grid(10, 4, 2), segs({{0, 4}, {2, 6}, {4, 8}, {6, 10}}));
  EXPECT_EQ(segment_grid(3, 4, 2), segs({{0, 3}}));
  EXPECT_EQ(segment_grid(9, 4, 2), segs({{0, 4}, {2, 6}, {4, 8}, {5, 9}}));
  EXPECT_EQ(segment_grid(4, 4, 2), segs({{0, 4}}));
}

TEST(SegmentGridTest, Errors) {
  auto code = [](double d, double w, double h) {
    try {
      segment_grid(d, w, h);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code(0, 4, 2), ErrorCode::kNonPositiveDuration);
  EXPECT_EQ(code(-1, 4, 2), ErrorCode::kNonPositiveDuration);
  EXPECT_EQ(code(10, 4, 0), ErrorCode::kBadHop);
  EXPECT_EQ(code(10, 4, 5), ErrorCode::kBadHop);
}

TEST(SegmentGridTest, MatchesLatticeScan) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> cs(1, 9000);
  for (int trial = 0; trial < 300; ++trial) {
    double duration = cs(rng) / 100.0;
    auto expected = oracle::grid_by_scan(duration, 4.0, 2.0);
    auto got = segment_grid(duration, 4.0, 2.0);
    ASSERT_EQ(got.size(), expected.size()) << duration;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_NEAR(got[i].start_s, expected[i].first, 1e-9);
      EXPECT_NEAR(got[i].end_s, expected[i].second, 1e-9);
    }
  }
}

TEST(SegmentGridTest, CoversEveryTimePoint) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dur(0.1, 120.0), win(0.5, 8.0), frac(0.05, 1.0), u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    double d = dur(rng), w = win(rng), h = w * frac(rng);
    auto grid = segment_grid(d, w, h);
    EXPECT_EQ(grid, segment_grid(d, w, h));
    for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_LT(grid[i - 1].start_s, grid[i].start_s);
    for (int k = 0; k < 1000; ++k) {
      double t = u(rng) * d;
      bool covered = false;
      for (const auto& s : grid) covered |= (s.start_s <= t && t < s.end_s);
      ASSERT_TRUE(covered) << "t=" << t << " d=" << d << " w=" << w << " h=" << h;
    }
  }
}

const char* kTwoLines =
    R"({"video_id": "v", "segment_index": 0, "start_s": 0, "end_s": 4, "modality": "face", "probs": [0.25, 0.75], "features": null}
{"video_id": "v", "segment_index": 1, "start_s": 2, "end_s": 6, "modality": "face", "probs": [0.5, 0.5], "features": [1.0, 2.0]}
)";

TEST(ParseStreamTest, WellFormed) {
  auto space = make_space({"A", "B"});
  auto records = parse_stream_text(kTwoLines, space);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].video_id, "v");
  EXPECT_EQ(records[0].probs[1], 0.75);
  EXPECT_FALSE(records[0].features);
  ASSERT_TRUE(records[1].features);
  EXPECT_EQ(records[1].features->dim(), 2u);
}

TEST(ParseStreamTest, SimplexViolationNamesLine) {
  auto space = make_space({"A", "B"});
  std::string text = std::string(kTwoLines) +
                     R"({"video_id": "v", "segment_index": 2, "start_s": 4, "end_s": 8, "modality": "face", "probs": [0.4, 0.4]})";
  try {
    parse_stream_text(text, space);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSimplexViolation);
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseStreamTest, DuplicateKey) {
  auto space = make_space({"A", "B"});
  std::string line =
      R"({"video_id": "v", "segment_index": 0, "start_s": 0, "end_s": 4, "modality": "face", "probs": [1, 0]})";
  try {
    parse_stream_text(line + "\n" + line + "\n", space);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateKey);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseStreamTest, CollectsEveryError) {
  auto space = make_space({"A", "B"});
  std::string text =
      "not json\n"
      R"({"video_id": "v", "segment_index": -1, "start_s": 0, "end_s": 4, "modality": "f", "probs": [1, 0]})" "\n"
      R"({"video_id": "v", "segment_index": 0, "start_s": 0, "end_s": 9, "modality": "f", "probs": [1, 0]})" "\n"
      R"({"video_id": "v", "segment_index": 0, "start_s": 0, "end_s": 4, "modality": "f", "probs": [1, 0, 0]})" "\n"
      "\n"
      R"({"video_id": "v", "segment_index": 0, "start_s": 0, "end_s": 4, "modality": "f", "probs": [1, 0]})" "\n";
  auto scan = scan_stream(text, space);
  ASSERT_EQ(scan.errors.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(scan.errors[i].code(), ErrorCode::kMalformed);
    EXPECT_EQ(scan.errors[i].line(), i + 1);
  }
  ASSERT_EQ(scan.records.size(), 1u);
}

TEST(ParseStreamTest, FormatRoundTrip) {
  auto space = make_space({"A", "B"});
  auto records = parse_stream_text(kTwoLines, space);
  auto again = parse_stream_text(format_stream(records), space);
  ASSERT_EQ(again.size(), records.size());
  EXPECT_EQ(format_stream(again), format_stream(records));
}

SegmentRecord rec(const SpaceRef& s, std::string video, std::size_t idx, std::string modality,
                  std::vector<double> p, double start = -1) {
  double st = start >= 0 ? start : 2.0 * static_cast<double>(idx);
  return SegmentRecord{std::move(video), idx, st, st + 4.0, std::move(modality), ProbVector(std::move(p), s),
                       std::nullopt};
}

TEST(AlignTest, JoinsModalities) {
  auto s = make_space({"A", "B"});
  std::vector<SegmentRecord> rs{rec(s, "v", 0, "a", {1, 0}), rec(s, "v", 0, "b", {0, 1})};
  auto r = align(rs, nullptr);
  ASSERT_EQ(r.samples.size(), 1u);
  EXPECT_EQ(r.samples[0].modalities.size(), 2u);
  EXPECT_EQ(r.dropped, 0u);
}

TEST(AlignTest, DropPolicy) {
  auto s = make_space({"A", "B"});
  std::vector<SegmentRecord> rs{rec(s, "v", 0, "a", {1, 0}), rec(s, "v", 1, "a", {1, 0}),
                                rec(s, "v", 1, "b", {0, 1})};
  auto r = align(rs, nullptr, {{"a", "b"}, MissingPolicy::kDrop});
  ASSERT_EQ(r.samples.size(), 1u);
  EXPECT_EQ(r.samples[0].segment_index, 1u);
  EXPECT_EQ(r.dropped, 1u);
}

TEST(AlignTest, UniformImpute) {
  auto s = EmotionSpace::default_basic();
  std::vector<double> one(8, 0.0);
  one[2] = 1.0;
  std::vector<SegmentRecord> rs{rec(s, "v", 0, "a", one)};
  auto r = align(rs, nullptr, {{"a", "b"}, MissingPolicy::kUniformImpute});
  ASSERT_EQ(r.samples.size(), 1u);
  EXPECT_EQ(r.imputed, 1u);
  const auto& b = r.samples[0].modalities.at("b");
  EXPECT_TRUE(b.imputed);
  EXPECT_FALSE(b.features);
  for (double v : b.probs.values()) EXPECT_EQ(v, 0.125);
}

TEST(AlignTest, InconsistentBounds) {
  auto s = make_space({"A", "B"});
  std::vector<SegmentRecord> rs{rec(s, "v", 0, "a", {1, 0}, 0.0), rec(s, "v", 0, "b", {1, 0}, 0.5)};
  try {
    align(rs, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInconsistentBounds);
  }
}

TEST(AlignTest, AttachesGoldAndOrdersByKey) {
  auto s = make_space({"A", "B"});
  std::vector<SegmentRecord> rs{rec(s, "w", 0, "a", {1, 0}), rec(s, "v", 2, "a", {1, 0}),
                                rec(s, "v", 10, "a", {1, 0})};
  LabelTable labels{{{"v", 2}, "B"}};
  auto r = align(rs, &labels);
  ASSERT_EQ(r.samples.size(), 3u);
  EXPECT_EQ(r.samples[0].segment_index, 2u);
  EXPECT_EQ(r.samples[1].segment_index, 10u);
  EXPECT_EQ(r.samples[2].video_id, "w");
  EXPECT_EQ(r.samples[0].gold, "B");
  EXPECT_FALSE(r.samples[1].gold);
}

TEST(AlignTest, LosslessUnderDropWhenComplete) {
  std::mt19937_64 rng(2);
  auto s = make_space({"A", "B", "C"});
  std::vector<SegmentRecord> rs;
  std::set<SegmentKey> keys;
  for (int v = 0; v < 5; ++v) {
    for (std::size_t k = 0; k < 7; ++k) {
      for (const char* m : {"x", "y", "z"}) {
        rs.push_back(rec(s, "v" + std::to_string(v), k, m, oracle::random_simplex(rng, 3)));
      }
      keys.emplace("v" + std::to_string(v), k);
    }
  }
  std::shuffle(rs.begin(), rs.end(), rng);
  auto r = align(rs, nullptr);
  EXPECT_EQ(r.samples.size(), keys.size());
  EXPECT_EQ(r.dropped, 0u);
}

TEST(LabelsTest, UnknownLabel) {
  auto s = make_space({"A", "B"});
  try {
    parse_labels_text(R"({"video_id": "v", "segment_index": 0, "label": "Z"})", s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownLabel);
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(CheckGridTest, FlagsOffGridRecords) {
  auto s = make_space({"A", "B"});
  std::vector<SegmentRecord> rs{rec(s, "v", 0, "a", {1, 0}), rec(s, "v", 1, "a", {1, 0}),
                                rec(s, "v", 2, "a", {1, 0})};
  EXPECT_TRUE(check_grid(rs, {}).empty());  // duration 8 -> (0,4), (2,6), (4,8)
  rs.push_back(rec(s, "v", 7, "a", {1, 0}, 3.0));
  EXPECT_FALSE(check_grid(rs, {}).empty());
  DurationTable d{{"v", 9.0}};
  std::vector<SegmentRecord> ok{rec(s, "v", 3, "a", {1, 0}, 5.0)};
  EXPECT_TRUE(check_grid(ok, {}, &d).empty());
}

}  // namespace
}  // namespace cerfuse
