#include "cerfuse/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "cerfuse/io.hpp"

namespace cerfuse {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kGridEps = 1e-9;
constexpr double kBoundsTol = 1e-6;

std::string key_string(const std::string& video, std::size_t segment) {
  return "(" + video + ", " + std::to_string(segment) + ")";
}

const json& require(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw Error(ErrorCode::kMalformed, std::string("missing field \"") + field + "\"", line);
  }
  return *it;
}

std::string require_string(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_string()) {
    throw Error(ErrorCode::kMalformed, std::string("\"") + field + "\" must be a string", line);
  }
  return v.get<std::string>();
}

std::size_t require_index(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(ErrorCode::kMalformed,
                std::string("\"") + field + "\" must be a non-negative integer", line);
  }
  return v.get<std::size_t>();
}

double require_number(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_number()) {
    throw Error(ErrorCode::kMalformed, std::string("\"") + field + "\" must be a number", line);
  }
  double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw Error(ErrorCode::kMalformed, std::string("\"") + field + "\" must be finite", line);
  }
  return d;
}

std::vector<double> require_numbers(const json& v, const char* field, std::size_t line) {
  if (!v.is_array()) {
    throw Error(ErrorCode::kMalformed, std::string("\"") + field + "\" must be an array", line);
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) {
      throw Error(ErrorCode::kMalformed,
                  std::string("\"") + field + "\" must hold only numbers", line);
    }
    out.push_back(x.get<double>());
  }
  return out;
}

json parse_line(std::string_view text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, e.what(), line);
  }
  if (!obj.is_object()) throw Error(ErrorCode::kMalformed, "record must be an object", line);
  return obj;
}

SegmentRecord parse_record(std::string_view text, std::size_t line, const SpaceRef& space,
                           const ParseOptions& options) {
  json obj = parse_line(text, line);
  std::string video = require_string(obj, "video_id", line);
  std::size_t index = require_index(obj, "segment_index", line);
  double start = require_number(obj, "start_s", line);
  double end = require_number(obj, "end_s", line);
  std::string modality = require_string(obj, "modality", line);
  if (video.empty()) throw Error(ErrorCode::kMalformed, "empty video_id", line);
  if (modality.empty()) throw Error(ErrorCode::kMalformed, "empty modality", line);
  if (start < 0.0 || !(end > start)) {
    throw Error(ErrorCode::kMalformed, "need 0 <= start_s < end_s", line);
  }
  if (end - start > options.window_s + kBoundsTol) {
    throw Error(ErrorCode::kMalformed, "segment is longer than the window", line);
  }
  std::vector<double> probs = require_numbers(require(obj, "probs", line), "probs", line);
  if (probs.size() != space->size()) {
    throw Error(ErrorCode::kMalformed,
                "\"probs\" has " + std::to_string(probs.size()) + " entries, space has " +
                    std::to_string(space->size()),
                line);
  }
  std::optional<ProbVector> p;
  try {
    p.emplace(std::move(probs), space, kIngestTolerance);
  } catch (const Error& e) {
    throw Error(ErrorCode::kSimplexViolation, e.what(), line);
  }
  std::optional<FeatureVector> features;
  if (auto it = obj.find("features"); it != obj.end() && !it->is_null()) {
    try {
      features.emplace(require_numbers(*it, "features", line));
    } catch (const Error& e) {
      if (e.line()) throw;
      throw Error(ErrorCode::kMalformed, e.what(), line);
    }
  }
  return SegmentRecord{std::move(video), index, start, end, std::move(modality), std::move(*p),
                       std::move(features)};
}

}  // namespace

std::vector<Segment> segment_grid(double duration_s, double window_s, double hop_s) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw Error(ErrorCode::kNonPositiveDuration, "duration must be positive");
  }
  if (!(window_s > 0.0) || !(hop_s > 0.0) || hop_s > window_s || !std::isfinite(window_s)) {
    throw Error(ErrorCode::kBadHop, "need 0 < hop <= window");
  }
  std::vector<Segment> out;
  if (duration_s < window_s) {
    out.push_back({0.0, duration_s});
    return out;
  }
  for (std::size_t k = 0;; ++k) {
    double start = static_cast<double>(k) * hop_s;
    if (start + window_s > duration_s + kGridEps) break;
    out.push_back({start, start + window_s});
  }
  double tail = duration_s - window_s;
  if (std::abs(out.back().start_s - tail) > kGridEps) out.push_back({tail, duration_s});
  return out;
}

StreamScan scan_stream(std::string_view text, const SpaceRef& space,
                       const ParseOptions& options) {
  StreamScan scan;
  std::set<std::tuple<std::string, std::size_t, std::string>> seen;
  for_each_line(text, [&](std::size_t line, std::string_view content) {
    try {
      SegmentRecord r = parse_record(content, line, space, options);
      if (!seen.emplace(r.video_id, r.segment_index, r.modality).second) {
        throw Error(ErrorCode::kDuplicateKey,
                    key_string(r.video_id, r.segment_index) + " modality '" + r.modality +
                        "' appears twice",
                    line);
      }
      scan.records.push_back(std::move(r));
    } catch (const Error& e) {
      scan.errors.push_back(e);
    }
  });
  return scan;
}

std::vector<SegmentRecord> parse_stream_text(std::string_view text, const SpaceRef& space,
                                             const ParseOptions& options) {
  StreamScan scan = scan_stream(text, space, options);
  if (!scan.errors.empty()) throw scan.errors.front();
  return std::move(scan.records);
}

std::vector<SegmentRecord> parse_stream(const std::string& path, const SpaceRef& space,
                                        const ParseOptions& options) {
  return parse_stream_text(read_text_file(path), space, options);
}

std::string format_record(const SegmentRecord& r) {
  ordered_json obj;
  obj["video_id"] = r.video_id;
  obj["segment_index"] = r.segment_index;
  obj["start_s"] = r.start_s;
  obj["end_s"] = r.end_s;
  obj["modality"] = r.modality;
  obj["probs"] = std::vector<double>(r.probs.values().begin(), r.probs.values().end());
  if (r.features) {
    obj["features"] = std::vector<double>(r.features->values().begin(), r.features->values().end());
  } else {
    obj["features"] = nullptr;
  }
  return obj.dump();
}

std::string format_stream(std::span<const SegmentRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += format_record(r);
    out += '\n';
  }
  return out;
}

LabelTable parse_labels_text(std::string_view text, const SpaceRef& space) {
  LabelTable table;
  for_each_line(text, [&](std::size_t line, std::string_view content) {
    json obj = parse_line(content, line);
    std::string video = require_string(obj, "video_id", line);
    std::size_t index = require_index(obj, "segment_index", line);
    std::string label = require_string(obj, "label", line);
    if (space && !space->find(label)) {
      throw Error(ErrorCode::kUnknownLabel, "label '" + label + "' not in space", line);
    }
    if (!table.emplace(SegmentKey{video, index}, std::move(label)).second) {
      throw Error(ErrorCode::kDuplicateKey, key_string(video, index) + " labelled twice", line);
    }
  });
  return table;
}

LabelTable parse_labels(const std::string& path, const SpaceRef& space) {
  return parse_labels_text(read_text_file(path), space);
}

std::string format_labels(const LabelTable& labels) {
  std::string out;
  for (const auto& [key, label] : labels) {
    ordered_json obj;
    obj["video_id"] = key.first;
    obj["segment_index"] = key.second;
    obj["label"] = label;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

DurationTable parse_durations_text(std::string_view text) {
  DurationTable table;
  for_each_line(text, [&](std::size_t line, std::string_view content) {
    json obj = parse_line(content, line);
    std::string video = require_string(obj, "video_id", line);
    double duration = require_number(obj, "duration_s", line);
    if (!(duration > 0.0)) {
      throw Error(ErrorCode::kNonPositiveDuration, "duration of '" + video + "'", line);
    }
    if (!table.emplace(video, duration).second) {
      throw Error(ErrorCode::kDuplicateKey, "video '" + video + "' listed twice", line);
    }
  });
  return table;
}

DurationTable parse_durations(const std::string& path) {
  return parse_durations_text(read_text_file(path));
}

std::string format_durations(const DurationTable& durations) {
  std::string out;
  for (const auto& [video, duration] : durations) {
    ordered_json obj;
    obj["video_id"] = video;
    obj["duration_s"] = duration;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<Error> check_grid(std::span<const SegmentRecord> records, const GridSpec& grid,
                              const DurationTable* durations) {
  std::map<std::string, double> extent;
  for (const auto& r : records) {
    double& e = extent[r.video_id];
    e = std::max(e, r.end_s);
  }
  if (durations) {
    for (auto& [video, e] : extent) {
      if (auto it = durations->find(video); it != durations->end()) e = it->second;
    }
  }
  std::map<std::string, std::vector<Segment>> grids;
  std::vector<Error> errors;
  for (const auto& [video, e] : extent) {
    try {
      grids.emplace(video, segment_grid(e, grid));
    } catch (const Error& err) {
      errors.emplace_back(ErrorCode::kGridMismatch, "video '" + video + "': " + err.what());
    }
  }
  for (const auto& r : records) {
    auto it = grids.find(r.video_id);
    if (it == grids.end()) continue;
    const auto& g = it->second;
    if (r.segment_index >= g.size()) {
      errors.emplace_back(ErrorCode::kGridMismatch,
                          key_string(r.video_id, r.segment_index) + " modality '" +
                              r.modality + "': index beyond the grid (" +
                              std::to_string(g.size()) + " segments)");
      continue;
    }
    const Segment& s = g[r.segment_index];
    if (std::abs(s.start_s - r.start_s) > kBoundsTol || std::abs(s.end_s - r.end_s) > kBoundsTol) {
      errors.emplace_back(ErrorCode::kGridMismatch,
                          key_string(r.video_id, r.segment_index) + " modality '" +
                              r.modality + "': bounds differ from the grid");
    }
  }
  return errors;
}

std::optional<MissingPolicy> parse_missing_policy(std::string_view name) {
  if (name == "drop") return MissingPolicy::kDrop;
  if (name == "uniform" || name == "uniform-impute") return MissingPolicy::kUniformImpute;
  return std::nullopt;
}

AlignResult align(std::span<const SegmentRecord> records, const LabelTable* labels,
                  const AlignOptions& options) {
  AlignResult result;
  if (records.empty()) return result;
  const SpaceRef& space = records.front().probs.space();

  std::vector<std::string> required = options.required_modalities;
  if (required.empty()) {
    std::set<std::string> all;
    for (const auto& r : records) all.insert(r.modality);
    required.assign(all.begin(), all.end());
  }

  std::map<SegmentKey, AlignedSample> joined;
  for (const auto& r : records) {
    if (!same_space(r.probs.space(), space)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "records of modality '" + r.modality + "' use a different label space");
    }
    SegmentKey key{r.video_id, r.segment_index};
    auto [it, inserted] = joined.try_emplace(key);
    AlignedSample& s = it->second;
    if (inserted) {
      s.video_id = r.video_id;
      s.segment_index = r.segment_index;
      s.start_s = r.start_s;
      s.end_s = r.end_s;
    } else if (std::abs(s.start_s - r.start_s) > kBoundsTol ||
               std::abs(s.end_s - r.end_s) > kBoundsTol) {
      throw Error(ErrorCode::kInconsistentBounds,
                  key_string(r.video_id, r.segment_index) + " has different bounds in modality '" +
                      r.modality + "'");
    }
    if (!s.modalities.emplace(r.modality, ModalityEntry{r.probs, r.features, false}).second) {
      throw Error(ErrorCode::kDuplicateKey, key_string(r.video_id, r.segment_index) +
                                                " modality '" + r.modality + "' appears twice");
    }
  }

  for (auto& [key, s] : joined) {
    bool missing = false;
    for (const auto& m : required) {
      if (!s.modalities.contains(m)) missing = true;
    }
    if (missing) {
      if (options.missing_policy == MissingPolicy::kDrop) {
        ++result.dropped;
        continue;
      }
      for (const auto& m : required) {
        if (!s.modalities.contains(m)) {
          s.modalities.emplace(m, ModalityEntry{ProbVector::uniform(space), std::nullopt, true});
        }
      }
      ++result.imputed;
    }
    if (labels) {
      if (auto it = labels->find(key); it != labels->end()) s.gold = it->second;
    }
    result.samples.push_back(std::move(s));
  }
  return result;
}

}  // namespace cerfuse
