#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cerfuse/core.hpp"

namespace cerfuse {

struct Segment {
  double start_s;
  double end_s;

  bool operator==(const Segment&) const = default;
};

struct GridSpec {
  double window_s = 4.0;
  double hop_s = 2.0;
};

/// Sliding windows over a clip of `duration_s` seconds.
///
/// Windows start at k * hop for every k with k * hop + window <= duration.
/// A clip shorter than one window yields the single segment (0, duration).
/// Otherwise, if the last regular window stops short of the clip end, a tail
/// window (duration - window, duration) is appended so every instant of
/// [0, duration) is covered.
///
/// Throws NonPositiveDuration, BadHop.
std::vector<Segment> segment_grid(double duration_s, double window_s = 4.0, double hop_s = 2.0);
inline std::vector<Segment> segment_grid(double duration_s, const GridSpec& grid) {
  return segment_grid(duration_s, grid.window_s, grid.hop_s);
}

/// One modality's output for one segment of one video.
struct SegmentRecord {
  std::string video_id;
  std::size_t segment_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string modality;
  ProbVector probs;
  std::optional<FeatureVector> features;
};

struct ParseOptions {
  // Upper bound on end_s - start_s (plus 1e-6).
  double window_s = 4.0;
};

struct StreamScan {
  std::vector<SegmentRecord> records;
  std::vector<Error> errors;  // every error, each carrying its line number
};

// Reads every line, collecting all errors instead of stopping at the first.
StreamScan scan_stream(std::string_view text, const SpaceRef& space,
                       const ParseOptions& options = {});

// Throws the first error of scan_stream: Malformed, SimplexViolation or
// DuplicateKey, each with the offending line attached.
std::vector<SegmentRecord> parse_stream_text(std::string_view text, const SpaceRef& space,
                                             const ParseOptions& options = {});
std::vector<SegmentRecord> parse_stream(const std::string& path, const SpaceRef& space,
                                        const ParseOptions& options = {});

std::string format_record(const SegmentRecord& record);
std::string format_stream(std::span<const SegmentRecord> records);

using SegmentKey = std::pair<std::string, std::size_t>;  // (video_id, segment_index)

using LabelTable = std::map<SegmentKey, std::string>;

// {"video_id": str, "segment_index": int, "label": str} per line. When
// `space` is given every label must belong to it (UnknownLabel otherwise).
LabelTable parse_labels_text(std::string_view text, const SpaceRef& space = nullptr);
LabelTable parse_labels(const std::string& path, const SpaceRef& space = nullptr);
std::string format_labels(const LabelTable& labels);

using DurationTable = std::map<std::string, double>;

// {"video_id": str, "duration_s": float} per line.
DurationTable parse_durations_text(std::string_view text);
DurationTable parse_durations(const std::string& path);
std::string format_durations(const DurationTable& durations);

// Checks that every record's (segment_index, start_s, end_s) matches the grid
// of its video. A video's duration comes from `durations` when listed there,
// otherwise from the largest end_s among its records. Returns GridMismatch
// errors; an empty result means the stream is consistent.
std::vector<Error> check_grid(std::span<const SegmentRecord> records, const GridSpec& grid,
                              const DurationTable* durations = nullptr);

enum class MissingPolicy { kDrop, kUniformImpute };

std::optional<MissingPolicy> parse_missing_policy(std::string_view name);

struct ModalityEntry {
  ProbVector probs;
  std::optional<FeatureVector> features;
  bool imputed = false;
};

/// All modalities' outputs for one (video, segment) key.
struct AlignedSample {
  std::string video_id;
  std::size_t segment_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  std::map<std::string, ModalityEntry> modalities;
  std::optional<std::string> gold;
};

struct AlignOptions {
  // Empty means every modality seen in the records.
  std::vector<std::string> required_modalities;
  MissingPolicy missing_policy = MissingPolicy::kDrop;
};

struct AlignResult {
  std::vector<AlignedSample> samples;  // ordered by (video_id, segment_index)
  std::size_t dropped = 0;
  std::size_t imputed = 0;
};

// Joins records on (video_id, segment_index). Throws InconsistentBounds,
// DuplicateKey, DimensionMismatch (records over different spaces).
AlignResult align(std::span<const SegmentRecord> records, const LabelTable* labels,
                  const AlignOptions& options = {});

}  // namespace cerfuse
