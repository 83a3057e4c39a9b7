#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cerfuse/core.hpp"

namespace cerfuse {

struct TimedPrediction {
  double start_s;
  double end_s;
  ProbVector probs;
};

struct FrameProb {
  std::size_t frame;
  ProbVector probs;
  std::size_t count;  // number of segments averaged into this frame
};

struct FrameTrack {
  std::string video_id;
  double fps = 0.0;
  std::vector<FrameProb> frames;  // frame indices 0, 1, 2, ...
};

// Number of frame start times i / fps that fall inside [0, duration_s).
std::size_t frame_count(double duration_s, double fps);

/// Duplicates each segment's prediction onto the frames it covers and
/// averages where segments overlap. Frame i sits at t = i / fps and belongs to
/// every segment with start_s <= t < end_s.
///
/// Throws EmptyInput, UncoveredFrame (naming the first uncovered frame),
/// NonPositiveDuration, DimensionMismatch (segments over different spaces).
FrameTrack broadcast_and_average(std::span<const TimedPrediction> segments, double fps,
                                 double duration_s, std::string video_id = {});

std::vector<std::pair<std::size_t, std::string>> frame_labels(const FrameTrack& track);

// One {"video_id", "frame", "label", "probs"} line per frame.
std::string format_frames(const FrameTrack& track);

}  // namespace cerfuse
