#include "cerfuse/synth.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "cerfuse/io.hpp"

namespace cerfuse {

namespace {

// Draws built directly on the engine's 64-bit output so the generated files
// do not depend on the standard library's distribution algorithms.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  double exponential() { return -std::log1p(-uniform()); }
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::vector<double> dirichlet_flat(std::size_t n) {
    std::vector<double> g(n);
    double sum = 0.0;
    for (double& v : g) {
      v = exponential();
      sum += v;
    }
    if (!(sum > 0.0)) return std::vector<double>(n, 1.0 / static_cast<double>(n));
    for (double& v : g) v /= sum;
    return g;
  }

 private:
  std::mt19937_64 rng_;
};

constexpr double kGoldMass = 0.7;

}  // namespace

void validate(const SynthConfig& c) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kBadConfig, what); };
  if (!c.space) bad("no label space");
  if (c.n_videos == 0) bad("n_videos must be positive");
  if (!(c.min_duration_s > 0.0) || !(c.max_duration_s >= c.min_duration_s)) {
    bad("need 0 < min duration <= max duration");
  }
  if (!(c.fps > 0.0)) bad("fps must be positive");
  if (!(c.grid.window_s > 0.0) || !(c.grid.hop_s > 0.0) || c.grid.hop_s > c.grid.window_s) {
    bad("need 0 < hop <= window");
  }
  if (c.modalities.empty()) bad("need at least one modality");
  std::set<std::string> names;
  for (const auto& m : c.modalities) {
    if (m.name.empty()) bad("empty modality name");
    if (!(m.reliability >= 0.0 && m.reliability <= 1.0)) bad("reliability of '" + m.name + "' outside [0, 1]");
    if (!names.insert(m.name).second) bad("modality '" + m.name + "' listed twice");
  }
  if (c.feature_modality.empty() || names.contains(c.feature_modality)) {
    bad("feature modality name must be non-empty and distinct");
  }
  if (!(c.feature_reliability >= 0.0 && c.feature_reliability <= 1.0)) bad("feature reliability outside [0, 1]");
  if (c.feature_dim == 0) bad("feature_dim must be positive");
  if (!(c.sigma >= 0.0) || !std::isfinite(c.sigma)) bad("sigma must be non-negative");
  if (!c.centers.empty()) {
    if (c.centers.size() != c.space->size()) bad("need one center per class");
    for (const auto& center : c.centers) {
      if (center.size() != c.feature_dim) bad("center dimension differs from feature_dim");
    }
  }
  if (c.scheme && !same_space(c.scheme->source_space(), c.space)) bad("scheme is over another space");
}

SynthDataset generate(const SynthConfig& config) {
  validate(config);
  const std::size_t C = config.space->size();
  Sampler rng(config.seed);
  SynthDataset data;

  data.centers = config.centers;
  if (data.centers.empty()) {
    data.centers.assign(C, std::vector<double>(config.feature_dim));
    for (auto& center : data.centers) {
      for (double& v : center) v = (static_cast<double>(rng.index(513)) - 256.0) / 256.0;
    }
  }

  auto emit = [&](double reliability, std::size_t gold) {
    if (rng.uniform() < reliability) {
      std::vector<double> p = rng.dirichlet_flat(C);
      for (double& v : p) v *= 1.0 - kGoldMass;
      p[gold] += kGoldMass;
      return p;
    }
    return rng.dirichlet_flat(C);
  };

  const int width = static_cast<int>(std::to_string(config.n_videos - 1).size());
  for (std::size_t v = 0; v < config.n_videos; ++v) {
    std::string id = std::to_string(v);
    id = "video_" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    double u = rng.uniform();
    double duration =
        std::round((config.min_duration_s + u * (config.max_duration_s - config.min_duration_s)) * 100.0) / 100.0;
    duration = std::max(duration, 0.01);
    data.durations.emplace(id, duration);

    auto grid = segment_grid(duration, config.grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      std::size_t gold = rng.index(C);
      data.labels.emplace(SegmentKey{id, k}, config.space->label(gold));
      for (const auto& m : config.modalities) {
        data.streams[m.name].push_back(SegmentRecord{id, k, grid[k].start_s, grid[k].end_s, m.name,
                                                     ProbVector(emit(m.reliability, gold), config.space),
                                                     std::nullopt});
      }
      std::vector<double> probs = emit(config.feature_reliability, gold);
      std::vector<double> f(config.feature_dim);
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = data.centers[gold][i] + config.sigma * rng.normal();
      data.features.push_back(SegmentRecord{id, k, grid[k].start_s, grid[k].end_s,
                                            config.feature_modality,
                                            ProbVector(std::move(probs), config.space),
                                            FeatureVector(std::move(f))});
    }
  }
  return data;
}

std::vector<std::string> write_dataset(const SynthDataset& data, const SynthConfig& config,
                                       const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& body) {
    write_file_atomic((fs::path(dir) / name).string(), body);
    written.push_back(name);
  };
  for (const auto& m : config.modalities) put(m.name + ".jsonl", format_stream(data.streams.at(m.name)));
  put(config.feature_modality + ".jsonl", format_stream(data.features));
  put("labels.jsonl", format_labels(data.labels));
  put("durations.jsonl", format_durations(data.durations));
  put("labels.json", label_config_json(config.space, config.scheme ? &*config.scheme : nullptr));
  return written;
}

SynthConfig parse_synth_config(std::string_view text, SynthConfig base) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
    if (!doc.is_object()) throw Error(ErrorCode::kBadConfig, "synth config must be an object");
    if (doc.contains("seed")) base.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("n_videos")) base.n_videos = doc["n_videos"].get<std::size_t>();
    if (doc.contains("duration_s")) {
      auto range = doc["duration_s"].get<std::vector<double>>();
      if (range.size() != 2) throw Error(ErrorCode::kBadConfig, "duration_s must be [min, max]");
      base.min_duration_s = range[0];
      base.max_duration_s = range[1];
    }
    if (doc.contains("fps")) base.fps = doc["fps"].get<double>();
    if (doc.contains("window_s")) base.grid.window_s = doc["window_s"].get<double>();
    if (doc.contains("hop_s")) base.grid.hop_s = doc["hop_s"].get<double>();
    if (doc.contains("modalities")) {
      base.modalities.clear();
      for (const auto& m : doc["modalities"]) {
        base.modalities.push_back({m.at("name").get<std::string>(), m.at("reliability").get<double>()});
      }
    }
    if (doc.contains("feature_modality")) base.feature_modality = doc["feature_modality"].get<std::string>();
    if (doc.contains("feature_reliability")) base.feature_reliability = doc["feature_reliability"].get<double>();
    if (doc.contains("feature_dim")) base.feature_dim = doc["feature_dim"].get<std::size_t>();
    if (doc.contains("sigma")) base.sigma = doc["sigma"].get<double>();
    if (doc.contains("centers")) base.centers = doc["centers"].get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBadConfig, std::string("synth config: ") + e.what());
  }
  validate(base);
  return base;
}

}  // namespace cerfuse
