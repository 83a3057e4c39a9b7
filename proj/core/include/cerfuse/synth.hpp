#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cerfuse/core.hpp"
#include "cerfuse/ingest.hpp"

namespace cerfuse {

struct SynthModality {
  std::string name;
  // Probability that a record is a noisy one-hot of the gold label rather
  // than a random point of the simplex.
  double reliability;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_videos = 20;
  double min_duration_s = 3.0;
  double max_duration_s = 30.0;
  double fps = 25.0;
  GridSpec grid;
  SpaceRef space = EmotionSpace::default_basic();
  std::optional<CompoundScheme> scheme = CompoundScheme::default_cexpr();
  std::vector<SynthModality> modalities = {{"face", 0.9}, {"audio", 0.5}, {"text", 0.3}};
  // Latent features come with their own prediction stream so that prototype
  // building has (features, predicted label) pairs.
  std::string feature_modality = "latent";
  double feature_reliability = 0.8;
  std::size_t feature_dim = 16;
  // One center per class; generated from the seed when empty.
  std::vector<std::vector<double>> centers;
  double sigma = 0.5;
};

struct SynthDataset {
  std::map<std::string, std::vector<SegmentRecord>> streams;  // by modality
  std::vector<SegmentRecord> features;                        // feature_modality stream
  LabelTable labels;
  DurationTable durations;
  std::vector<std::vector<double>> centers;
};

// Throws BadConfig.
void validate(const SynthConfig& config);

/// Per segment: a uniform gold label; per modality, with probability
/// `reliability` the record is 0.7 * onehot(gold) + 0.3 * Dirichlet(1), else a
/// Dirichlet(1) sample; features are center[gold] + sigma * N(0, I).
/// Generated centers are multiples of 1/256 so sums of them stay exact.
SynthDataset generate(const SynthConfig& config);

// Writes <modality>.jsonl per modality, <feature_modality>.jsonl, labels.jsonl,
// durations.jsonl and labels.json (space and scheme config) into `dir`.
// Returns the written file names in a fixed order.
std::vector<std::string> write_dataset(const SynthDataset& data, const SynthConfig& config,
                                       const std::string& dir);

// JSON object with any of the SynthConfig fields; absent fields keep defaults.
// "duration_s": [min, max], "modalities": [{"name", "reliability"}].
SynthConfig parse_synth_config(std::string_view text, SynthConfig base = {});

}  // namespace cerfuse
