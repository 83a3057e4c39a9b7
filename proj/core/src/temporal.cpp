#include "cerfuse/temporal.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace cerfuse {

namespace {

// Absorbs rounding in i / fps and in tail-segment starts like duration - 4.
constexpr double kTimeEps = 1e-9;

}  // namespace

std::size_t frame_count(double duration_s, double fps) {
  if (!(duration_s > 0.0)) throw Error(ErrorCode::kNonPositiveDuration, "duration must be positive");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw Error(ErrorCode::kBadConfig, "fps must be positive");
  return static_cast<std::size_t>(std::ceil(duration_s * fps - kTimeEps));
}

FrameTrack broadcast_and_average(std::span<const TimedPrediction> segments, double fps,
                                 double duration_s, std::string video_id) {
  if (segments.empty()) throw Error(ErrorCode::kEmptyInput, "no segments to broadcast");
  const std::size_t n = frame_count(duration_s, fps);
  const SpaceRef& space = segments.front().probs.space();
  const std::size_t C = space->size();
  for (const auto& s : segments) {
    if (!same_space(s.probs.space(), space)) {
      throw Error(ErrorCode::kDimensionMismatch, "segments use different label spaces");
    }
  }

  // Running means: exact when every covering segment agrees.
  std::vector<double> means(n * C, 0.0);
  std::vector<std::size_t> counts(n, 0);
  for (const auto& s : segments) {
    // First frame with t >= start, then walk while t < end.
    auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(s.start_s * fps - kTimeEps)));
    for (std::size_t i = first; i < n; ++i) {
      double t = static_cast<double>(i) / fps;
      if (t < s.start_s - kTimeEps) continue;
      if (t >= s.end_s - kTimeEps) break;
      const double k = static_cast<double>(++counts[i]);
      for (std::size_t c = 0; c < C; ++c) means[i * C + c] += (s.probs[c] - means[i * C + c]) / k;
    }
  }

  FrameTrack track;
  track.video_id = std::move(video_id);
  track.fps = fps;
  track.frames.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] == 0) {
      throw Error(ErrorCode::kUncoveredFrame,
                  "frame " + std::to_string(i) + " of '" + track.video_id +
                      "' is not covered by any segment");
    }
    std::vector<double> mean(means.begin() + i * C, means.begin() + (i + 1) * C);
    track.frames.push_back({i, ProbVector(std::move(mean), space, kInternalTolerance), counts[i]});
  }
  return track;
}

std::vector<std::pair<std::size_t, std::string>> frame_labels(const FrameTrack& track) {
  std::vector<std::pair<std::size_t, std::string>> out;
  out.reserve(track.frames.size());
  for (const auto& f : track.frames) out.emplace_back(f.frame, argmax_label(f.probs));
  return out;
}

std::string format_frames(const FrameTrack& track) {
  std::string out;
  for (const auto& f : track.frames) {
    nlohmann::ordered_json obj;
    obj["video_id"] = track.video_id;
    obj["frame"] = f.frame;
    obj["label"] = argmax_label(f.probs);
    obj["probs"] = std::vector<double>(f.probs.values().begin(), f.probs.values().end());
    out += obj.dump();
    out += '\n';
  }
  return out;
}

}  // namespace cerfuse
