#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cerfuse/cerfuse.hpp"

namespace cerfuse::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Common {
  std::string space_file;
  std::string scheme_file;
  double window = 4.0;
  double hop = 2.0;
  bool no_manifest = false;
};

void add_common(CLI::App* cmd, Common& c, bool grid = true) {
  cmd->add_option("--space", c.space_file, "Label config with the basic space")
      ->check(CLI::ExistingFile);
  cmd->add_option("--scheme", c.scheme_file, "Label config with the compound scheme")
      ->check(CLI::ExistingFile);
  if (grid) {
    cmd->add_option("--window", c.window, "Segment window length in seconds")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--hop", c.hop, "Segment hop in seconds")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }
  cmd->add_flag("--no-manifest", c.no_manifest, "Do not write the run manifest");
}

SpaceRef basic_space(const Common& c) {
  if (c.space_file.empty()) return EmotionSpace::default_basic();
  return load_label_config(c.space_file).basic;
}

CompoundScheme scheme_of(const Common& c) {
  if (!c.scheme_file.empty()) {
    auto cfg = load_label_config(c.scheme_file);
    if (!cfg.scheme) throw Error(ErrorCode::kInvalidScheme, c.scheme_file + " has no \"compounds\"");
    if (!c.space_file.empty() && !same_space(cfg.basic, basic_space(c))) {
      throw Error(ErrorCode::kInvalidScheme, "scheme and space configs disagree on basic labels");
    }
    return *cfg.scheme;
  }
  if (!c.space_file.empty()) {
    auto cfg = load_label_config(c.space_file);
    if (cfg.scheme) return *cfg.scheme;
    return CompoundScheme::default_cexpr(cfg.basic);
  }
  return CompoundScheme::default_cexpr();
}

std::vector<SegmentRecord> read_streams(const std::vector<std::string>& paths,
                                        const SpaceRef& space, const Common& c) {
  std::vector<SegmentRecord> all;
  for (const auto& p : paths) {
    auto records = parse_stream(p, space, {c.window});
    std::move(records.begin(), records.end(), std::back_inserter(all));
  }
  return all;
}

std::string iso_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// Sidecar describing how an output was produced. It carries a timestamp, so
// it is the one file a rerun does not reproduce byte for byte.
struct Manifest {
  std::string command;
  std::vector<std::string> args;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> configs;
  std::optional<std::uint64_t> seed;

  void write(const std::string& path) const {
    ordered_json doc;
    doc["command"] = command;
    doc["args"] = args;
    doc["configs"] = configs;
    doc["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
    doc["inputs"] = inputs;
    doc["outputs"] = outputs;
    doc["tool_version"] = kToolVersion;
    doc["timestamp"] = iso_timestamp();
    write_file_atomic(path, doc.dump(2) + "\n");
  }
};

Manifest manifest_for(const std::string& command, const std::vector<std::string>& args,
                      const Common& c) {
  Manifest m;
  m.command = command;
  m.args = args;
  if (!c.space_file.empty()) m.configs["space"] = c.space_file;
  if (!c.scheme_file.empty()) m.configs["scheme"] = c.scheme_file;
  return m;
}

void finish(Manifest& m, const Common& c, const std::string& primary_output) {
  if (c.no_manifest) return;
  m.write(primary_output + ".manifest.json");
}

// Picks the records of one modality; with an empty name the stream must hold
// exactly one modality.
std::vector<SegmentRecord> single_modality(std::vector<SegmentRecord> records,
                                           const std::string& modality) {
  std::set<std::string> present;
  for (const auto& r : records) present.insert(r.modality);
  std::string chosen = modality;
  if (chosen.empty()) {
    if (present.size() > 1) {
      throw Error(ErrorCode::kModalityMismatch,
                  "stream holds several modalities; pick one with --modality");
    }
    if (present.empty()) return records;
    chosen = *present.begin();
  }
  std::erase_if(records, [&](const SegmentRecord& r) { return r.modality != chosen; });
  if (records.empty()) throw Error(ErrorCode::kModalityMismatch, "no records for '" + chosen + "'");
  return records;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  Common common;
  std::vector<std::string> streams;
  std::string labels;
  std::string durations;
  std::vector<std::string> required;
  std::string policy = "drop";
  bool compound = false;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  SpaceRef space = a.compound ? scheme_of(a.common).compound_space() : basic_space(a.common);
  auto policy = parse_missing_policy(a.policy);
  std::size_t errors = 0;
  std::vector<SegmentRecord> all;
  for (const auto& path : a.streams) {
    std::string text;
    try {
      text = read_text_file(path);
    } catch (const Error& e) {
      out << path << ": " << e.what() << "\n";
      ++errors;
      continue;
    }
    StreamScan scan = scan_stream(text, space, {a.common.window});
    for (const auto& e : scan.errors) out << path << ":" << e.line().value_or(0) << ": " << e.what() << "\n";
    errors += scan.errors.size();
    out << path << ": " << scan.records.size() << " records, " << scan.errors.size() << " errors\n";
    std::move(scan.records.begin(), scan.records.end(), std::back_inserter(all));
  }

  DurationTable durations;
  if (!a.durations.empty()) durations = parse_durations(a.durations);
  for (const auto& e : check_grid(all, {a.common.window, a.common.hop},
                                  a.durations.empty() ? nullptr : &durations)) {
    out << "grid: " << e.what() << "\n";
    ++errors;
  }

  LabelTable labels;
  if (!a.labels.empty()) {
    try {
      labels = parse_labels(a.labels, space);
    } catch (const Error& e) {
      out << a.labels << ":" << e.line().value_or(0) << ": " << e.what() << "\n";
      ++errors;
    }
  }
  try {
    AlignResult r = align(all, a.labels.empty() ? nullptr : &labels,
                          {a.required, policy.value_or(MissingPolicy::kDrop)});
    std::size_t labelled = 0;
    for (const auto& s : r.samples) labelled += s.gold ? 1 : 0;
    out << "aligned: " << r.samples.size() << " samples, dropped " << r.dropped << ", imputed "
        << r.imputed;
    if (!a.labels.empty()) out << ", labelled " << labelled;
    out << "\n";
  } catch (const Error& e) {
    out << "align: " << e.what() << "\n";
    ++errors;
  }
  out << (errors == 0 ? "OK" : "FAILED") << " (" << errors << " errors)\n";
  return errors == 0 ? kOk : kValidationFailure;
}

// ---------------------------------------------------------------- mhpf

struct TrainArgs {
  Common common;
  std::vector<std::string> streams;
  std::string labels;
  std::string out;
  std::string history;
  std::vector<std::string> modalities;
  std::string policy = "drop";
  std::size_t heads = 4;
  double val_fraction = 0.2;
  TrainConfig train;
  std::optional<std::uint64_t> seed;
};

// Holds out whole videos so no clip contributes to both splits. With a single
// video the split falls back to segments.
std::pair<std::vector<FusionExample>, std::vector<FusionExample>> split(
    const MhpfModel& model, const std::vector<AlignedSample>& samples, double fraction,
    std::uint64_t seed) {
  std::vector<std::string> videos;
  for (const auto& s : samples) {
    if (videos.empty() || videos.back() != s.video_id) videos.push_back(s.video_id);
  }
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto shuffle = [&](auto& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
  };
  std::vector<FusionExample> train_set, val_set;
  if (videos.size() >= 2) {
    shuffle(videos);
    auto n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(videos.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, videos.size() - 1);
    std::set<std::string> held(videos.begin(), videos.begin() + static_cast<std::ptrdiff_t>(n_val));
    for (const auto& s : samples) {
      (held.contains(s.video_id) ? val_set : train_set).push_back(make_example(model, s));
    }
  } else {
    std::vector<std::size_t> idx(samples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    shuffle(idx);
    auto n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(idx.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, std::max<std::size_t>(idx.size(), 2) - 1);
    std::set<std::size_t> held(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(n_val, idx.size())));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      (held.contains(i) ? val_set : train_set).push_back(make_example(model, samples[i]));
    }
  }
  return {std::move(train_set), std::move(val_set)};
}

int cmd_mhpf_train(TrainArgs a, const std::vector<std::string>& argv, std::ostream& out) {
  SpaceRef space = basic_space(a.common);
  auto records = read_streams(a.streams, space, a.common);
  LabelTable labels = parse_labels(a.labels, space);
  AlignResult aligned = align(records, &labels,
                              {a.modalities, parse_missing_policy(a.policy).value_or(MissingPolicy::kDrop)});
  std::vector<AlignedSample> samples;
  for (auto& s : aligned.samples) {
    if (s.gold) samples.push_back(std::move(s));
  }
  if (samples.empty()) throw Error(ErrorCode::kEmptySplit, "no labelled samples to train on");

  std::vector<std::string> order = a.modalities;
  if (order.empty()) {
    for (const auto& [name, entry] : samples.front().modalities) order.push_back(name);
  }
  a.train.seed = *a.seed;
  MhpfModel model = MhpfModel::init(a.heads, order, space, *a.seed);
  auto [train_set, val_set] = split(model, samples, a.val_fraction, *a.seed);
  TrainResult result = train(model, train_set, val_set, a.train);

  save_model(result.model, a.out);
  std::string history = a.history.empty() ? a.out + ".history.json" : a.history;
  write_file_atomic(history, history_json(result));

  const auto& first = result.history.front();
  const auto& best = result.history[result.best_epoch];
  out << "samples: " << train_set.size() << " train, " << val_set.size() << " validation (dropped "
      << aligned.dropped << ", imputed " << aligned.imputed << ")\n";
  out << "epochs run: " << result.epochs_run << ", best epoch " << result.best_epoch << "\n";
  out << "validation loss: " << first.validation_loss << " -> " << best.validation_loss << "\n";

  Manifest m = manifest_for("mhpf-train", argv, a.common);
  m.seed = *a.seed;
  m.inputs = a.streams;
  m.inputs.push_back(a.labels);
  m.outputs = {a.out, history};
  finish(m, a.common, a.out);
  return kOk;
}

struct PredictArgs {
  Common common;
  std::string model;
  std::vector<std::string> streams;
  std::string out;
  std::string policy = "drop";
  std::string tag = "fused";
};

int cmd_mhpf_predict(const PredictArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  MhpfModel model = load_model(a.model);
  SpaceRef space = model.space();
  if (!a.common.space_file.empty() && !same_space(space, basic_space(a.common))) {
    throw Error(ErrorCode::kModalityMismatch, "model and --space disagree on labels");
  }
  auto records = read_streams(a.streams, space, a.common);
  std::erase_if(records, [&](const SegmentRecord& r) {
    return std::find(model.modality_order().begin(), model.modality_order().end(), r.modality) ==
           model.modality_order().end();
  });
  AlignResult aligned = align(records, nullptr,
                              {model.modality_order(),
                               parse_missing_policy(a.policy).value_or(MissingPolicy::kDrop)});
  std::vector<SegmentRecord> fused;
  fused.reserve(aligned.samples.size());
  for (const auto& s : aligned.samples) {
    std::map<std::string, ProbVector> inputs;
    for (const auto& [name, entry] : s.modalities) inputs.emplace(name, entry.probs);
    fused.push_back(SegmentRecord{s.video_id, s.segment_index, s.start_s, s.end_s, a.tag,
                                  forward(model, inputs), std::nullopt});
  }
  write_file_atomic(a.out, format_stream(fused));
  out << "fused " << fused.size() << " segments (dropped " << aligned.dropped << ", imputed "
      << aligned.imputed << ")\n";

  Manifest m = manifest_for("mhpf-predict", argv, a.common);
  m.inputs = a.streams;
  m.inputs.insert(m.inputs.begin(), a.model);
  m.outputs = {a.out};
  finish(m, a.common, a.out);
  return kOk;
}

// ---------------------------------------------------------------- compound

struct PpaArgs {
  Common common;
  std::string stream;
  std::string out;
};

int cmd_ppa(const PpaArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  CompoundScheme scheme = scheme_of(a.common);
  auto records = parse_stream(a.stream, scheme.source_space(), {a.common.window});
  std::vector<SegmentRecord> mapped;
  mapped.reserve(records.size());
  for (const auto& r : records) {
    mapped.push_back(SegmentRecord{r.video_id, r.segment_index, r.start_s, r.end_s, r.modality,
                                   ppa(r.probs, scheme), std::nullopt});
  }
  write_file_atomic(a.out, format_stream(mapped));
  out << "mapped " << mapped.size() << " records onto " << scheme.size() << " compounds\n";
  Manifest m = manifest_for("ppa", argv, a.common);
  m.inputs = {a.stream};
  m.outputs = {a.out};
  finish(m, a.common, a.out);
  return kOk;
}

struct PfsaBuildArgs {
  Common common;
  std::string features;
  std::string labels;
  std::string out;
};

int cmd_pfsa_build(const PfsaBuildArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  CompoundScheme scheme = scheme_of(a.common);
  const SpaceRef& space = scheme.source_space();
  auto records = parse_stream(a.features, space, {a.common.window});
  LabelTable labels = parse_labels(a.labels, space);
  std::vector<PrototypeSample> samples;
  for (const auto& r : records) {
    auto it = labels.find({r.video_id, r.segment_index});
    if (it == labels.end()) continue;
    if (!r.features) {
      throw Error(ErrorCode::kMalformed, "record (" + r.video_id + ", " +
                                             std::to_string(r.segment_index) + ") has no features");
    }
    samples.push_back({*r.features, space->index_of(it->second), argmax_index(r.probs.values())});
  }
  PrototypeBank bank = build_prototypes(samples, scheme);
  save_bank(bank, a.out);
  std::size_t used = 0;
  for (const auto& [label, n] : bank.counts()) used += n;
  out << "prototypes from " << used << " correctly classified of " << samples.size()
      << " labelled samples, dim " << bank.dim() << "\n";
  Manifest m = manifest_for("pfsa-build", argv, a.common);
  m.inputs = {a.features, a.labels};
  m.outputs = {a.out};
  finish(m, a.common, a.out);
  return kOk;
}

struct PfsaPredictArgs {
  Common common;
  std::string bank;
  std::string features;
  std::string out;
  double temperature = 0.5;
};

int cmd_pfsa_predict(const PfsaPredictArgs& a, const std::vector<std::string>& argv,
                     std::ostream& out) {
  PrototypeBank bank = load_bank(a.bank);
  Temperature t(a.temperature);
  auto records = parse_stream(a.features, bank.scheme().source_space(), {a.common.window});
  std::vector<SegmentRecord> mapped;
  for (const auto& r : records) {
    if (!r.features) {
      throw Error(ErrorCode::kMalformed, "record (" + r.video_id + ", " +
                                             std::to_string(r.segment_index) + ") has no features");
    }
    mapped.push_back(SegmentRecord{r.video_id, r.segment_index, r.start_s, r.end_s, r.modality,
                                   pfsa(*r.features, bank, t), std::nullopt});
  }
  write_file_atomic(a.out, format_stream(mapped));
  out << "mapped " << mapped.size() << " records onto " << bank.scheme().size() << " compounds\n";
  Manifest m = manifest_for("pfsa-predict", argv, a.common);
  m.inputs = {a.bank, a.features};
  m.outputs = {a.out};
  finish(m, a.common, a.out);
  return kOk;
}

// ---------------------------------------------------------------- zeroshot

struct ZeroShotArgs {
  Common common;
  std::string embeddings;
  std::string queries;
  std::string out;
  std::string tag = "scene_label";
  double temperature = 1.0;
  bool compound = false;
};

int cmd_zeroshot(const ZeroShotArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  SpaceRef space = a.compound ? scheme_of(a.common).compound_space() : basic_space(a.common);
  LabelEmbeddingSet set = load_label_embeddings(a.embeddings, space);
  Temperature t(a.temperature);
  std::vector<SegmentRecord> results;
  std::set<SegmentKey> seen;
  for_each_line(read_text_file(a.queries), [&](std::size_t line, std::string_view text) {
    nlohmann::json obj;
    std::string video;
    std::size_t index = 0;
    double start = 0.0, end = 0.0;
    std::vector<double> embedding;
    try {
      obj = nlohmann::json::parse(text);
      video = obj.at("video_id").get<std::string>();
      index = obj.at("segment_index").get<std::size_t>();
      start = obj.at("start_s").get<double>();
      end = obj.at("end_s").get<double>();
      embedding = obj.at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformed, e.what(), line);
    }
    if (!seen.emplace(video, index).second) {
      throw Error(ErrorCode::kDuplicateKey, "(" + video + ", " + std::to_string(index) + ") twice", line);
    }
    results.push_back(SegmentRecord{video, index, start, end, a.tag,
                                    match(FeatureVector(std::move(embedding)), set, t), std::nullopt});
  });
  write_file_atomic(a.out, format_stream(results));
  out << "matched " << results.size() << " queries against " << space->size() << " labels\n";
  Manifest m = manifest_for("zeroshot", argv, a.common);
  m.inputs = {a.embeddings, a.queries};
  m.outputs = {a.out};
  finish(m, a.common, a.out);
  return kOk;
}

// ---------------------------------------------------------------- frames

struct FramesArgs {
  Common common;
  std::string stream;
  std::string durations;
  std::string modality;
  std::string out;
  double fps = 25.0;
  bool compound = false;
};

int cmd_frames(const FramesArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  SpaceRef space = a.compound ? scheme_of(a.common).compound_space() : basic_space(a.common);
  auto records = single_modality(parse_stream(a.stream, space, {a.common.window}), a.modality);
  DurationTable durations;
  if (!a.durations.empty()) durations = parse_durations(a.durations);

  std::map<std::string, std::vector<TimedPrediction>> by_video;
  std::map<std::string, double> extent;
  for (const auto& r : records) {
    by_video[r.video_id].push_back({r.start_s, r.end_s, r.probs});
    extent[r.video_id] = std::max(extent[r.video_id], r.end_s);
  }
  std::string body;
  std::size_t frames = 0;
  for (const auto& [video, segments] : by_video) {
    double duration = extent[video];
    if (auto it = durations.find(video); it != durations.end()) duration = it->second;
    FrameTrack track = broadcast_and_average(segments, a.fps, duration, video);
    frames += track.frames.size();
    body += format_frames(track);
  }
  write_file_atomic(a.out, body);
  out << "wrote " << frames << " frames for " << by_video.size() << " videos at " << a.fps << " fps\n";
  Manifest m = manifest_for("frames", argv, a.common);
  m.inputs = {a.stream};
  if (!a.durations.empty()) m.inputs.push_back(a.durations);
  m.outputs = {a.out};
  finish(m, a.common, a.out);
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  Common common;
  std::string preds;
  std::string labels;
  std::string modality;
  std::string out;
  std::string table;
  bool compound = false;
};

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  SpaceRef space = a.compound ? scheme_of(a.common).compound_space() : basic_space(a.common);
  auto records = single_modality(parse_stream(a.preds, space, {a.common.window}), a.modality);
  LabelTable labels = parse_labels(a.labels, space);
  std::vector<std::string> golds, preds;
  std::size_t unlabelled = 0;
  for (const auto& r : records) {
    auto it = labels.find({r.video_id, r.segment_index});
    if (it == labels.end()) {
      ++unlabelled;
      continue;
    }
    golds.push_back(it->second);
    preds.push_back(argmax_label(r.probs));
  }
  EvalReport report = evaluate(confusion(golds, preds, space));
  std::string table = report_table(report);
  out << table;
  if (unlabelled) out << "skipped " << unlabelled << " unlabelled predictions\n";
  write_file_atomic(a.out, report_json(report));
  std::string table_path = a.table.empty() ? a.out + ".txt" : a.table;
  write_file_atomic(table_path, table);
  Manifest m = manifest_for("eval", argv, a.common);
  m.inputs = {a.preds, a.labels};
  m.outputs = {a.out, table_path};
  finish(m, a.common, a.out);
  return kOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  Common common;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> videos;
  std::vector<std::string> modalities;  // name:reliability
  std::optional<double> sigma;
  std::optional<double> fps;
  std::optional<std::size_t> dim;
};

int cmd_synth(const SynthArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  SynthConfig cfg;
  if (!a.common.space_file.empty() || !a.common.scheme_file.empty()) {
    cfg.space = basic_space(a.common);
    try {
      cfg.scheme = scheme_of(a.common);
    } catch (const Error&) {
      cfg.scheme.reset();
    }
  }
  if (!a.config.empty()) cfg = parse_synth_config(read_text_file(a.config), cfg);
  cfg.seed = *a.seed;
  cfg.grid = {a.common.window, a.common.hop};
  if (a.videos) cfg.n_videos = *a.videos;
  if (a.sigma) cfg.sigma = *a.sigma;
  if (a.fps) cfg.fps = *a.fps;
  if (a.dim) cfg.feature_dim = *a.dim;
  if (!a.modalities.empty()) {
    cfg.modalities.clear();
    for (const auto& entry : a.modalities) {
      auto colon = entry.rfind(':');
      if (colon == std::string::npos) {
        throw Error(ErrorCode::kBadConfig, "--modality expects name:reliability, got '" + entry + "'");
      }
      double rho = 0.0;
      try {
        rho = std::stod(entry.substr(colon + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kBadConfig, "bad reliability in '" + entry + "'");
      }
      cfg.modalities.push_back({entry.substr(0, colon), rho});
    }
  }
  SynthDataset data = generate(cfg);
  auto files = write_dataset(data, cfg, a.out);
  out << "generated " << data.labels.size() << " segments over " << data.durations.size()
      << " videos into " << a.out << "\n";
  if (!a.common.no_manifest) {
    Manifest m = manifest_for("synth", argv, a.common);
    m.seed = cfg.seed;
    if (!a.config.empty()) m.inputs = {a.config};
    for (const auto& f : files) m.outputs.push_back((fs::path(a.out) / f).string());
    m.write((fs::path(a.out) / "manifest.json").string());
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Late fusion and compound-emotion mapping over per-modality prediction streams",
               "cerfuse"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  ValidateArgs validate_args;
  auto* validate_cmd = app.add_subcommand("validate", "Parse and align streams, report every error");
  add_common(validate_cmd, validate_args.common);
  validate_cmd->add_option("streams", validate_args.streams, "Prediction stream files")->required();
  validate_cmd->add_option("--labels", validate_args.labels, "Label file");
  validate_cmd->add_option("--durations", validate_args.durations, "Per-video durations file");
  validate_cmd->add_option("--require", validate_args.required, "Required modalities")->delimiter(',');
  validate_cmd->add_option("--missing-policy", validate_args.policy)
      ->check(CLI::IsMember({"drop", "uniform"}))
      ->capture_default_str();
  validate_cmd->add_flag("--compound", validate_args.compound, "Streams are over the compound space");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("mhpf-train", "Fit a multi-head probability fusion model");
  add_common(train_cmd, train_args.common);
  train_cmd->add_option("streams", train_args.streams, "Prediction stream files")->required();
  train_cmd->add_option("--labels", train_args.labels, "Label file")->required();
  train_cmd->add_option("--out", train_args.out, "Model file to write")->required();
  train_cmd->add_option("--history", train_args.history, "History file (default <out>.history.json)");
  train_cmd->add_option("--modalities", train_args.modalities, "Modality order")->delimiter(',');
  train_cmd->add_option("--missing-policy", train_args.policy)
      ->check(CLI::IsMember({"drop", "uniform"}))
      ->capture_default_str();
  train_cmd->add_option("--heads", train_args.heads)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_args.train.learning_rate)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", train_args.train.max_epochs)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", train_args.train.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--patience", train_args.train.patience)->capture_default_str();
  train_cmd->add_option("--val-fraction", train_args.val_fraction)
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--seed", train_args.seed, "Random seed")->required();

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("mhpf-predict", "Fuse streams with a trained model");
  add_common(predict_cmd, predict_args.common);
  predict_cmd->add_option("streams", predict_args.streams, "Prediction stream files")->required();
  predict_cmd->add_option("--model", predict_args.model)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", predict_args.out)->required();
  predict_cmd->add_option("--tag", predict_args.tag, "Modality tag of the output")->capture_default_str();
  predict_cmd->add_option("--missing-policy", predict_args.policy)
      ->check(CLI::IsMember({"drop", "uniform"}))
      ->capture_default_str();

  PpaArgs ppa_args;
  auto* ppa_cmd = app.add_subcommand("ppa", "Map basic-emotion predictions to compounds by pair sums");
  add_common(ppa_cmd, ppa_args.common);
  ppa_cmd->add_option("stream", ppa_args.stream, "Prediction stream")->required();
  ppa_cmd->add_option("--out", ppa_args.out)->required();

  PfsaBuildArgs build_args;
  auto* build_cmd = app.add_subcommand("pfsa-build", "Build compound prototypes from validation features");
  add_common(build_cmd, build_args.common);
  build_cmd->add_option("features", build_args.features, "Stream with features")->required();
  build_cmd->add_option("--labels", build_args.labels)->required();
  build_cmd->add_option("--out", build_args.out)->required();

  PfsaPredictArgs pfsa_args;
  auto* pfsa_cmd = app.add_subcommand("pfsa-predict", "Map features to compounds by prototype similarity");
  add_common(pfsa_cmd, pfsa_args.common);
  pfsa_cmd->add_option("features", pfsa_args.features, "Stream with features")->required();
  pfsa_cmd->add_option("--bank", pfsa_args.bank)->required()->check(CLI::ExistingFile);
  pfsa_cmd->add_option("--out", pfsa_args.out)->required();
  pfsa_cmd->add_option("--temperature", pfsa_args.temperature)->capture_default_str()->check(CLI::PositiveNumber);

  ZeroShotArgs zs_args;
  auto* zs_cmd = app.add_subcommand("zeroshot", "Match embeddings against label text embeddings");
  add_common(zs_cmd, zs_args.common);
  zs_cmd->add_option("queries", zs_args.queries, "Query embeddings, one segment per line")->required();
  zs_cmd->add_option("--embeddings", zs_args.embeddings, "Label embedding file")->required();
  zs_cmd->add_option("--out", zs_args.out)->required();
  zs_cmd->add_option("--tag", zs_args.tag)->capture_default_str();
  zs_cmd->add_option("--temperature", zs_args.temperature)->capture_default_str()->check(CLI::PositiveNumber);
  zs_cmd->add_flag("--compound", zs_args.compound, "Labels are the compound names");

  FramesArgs frames_args;
  auto* frames_cmd = app.add_subcommand("frames", "Expand segment predictions to frames");
  add_common(frames_cmd, frames_args.common);
  frames_cmd->add_option("stream", frames_args.stream, "Prediction stream")->required();
  frames_cmd->add_option("--fps", frames_args.fps)->capture_default_str()->check(CLI::PositiveNumber);
  frames_cmd->add_option("--durations", frames_args.durations, "Per-video durations file");
  frames_cmd->add_option("--modality", frames_args.modality);
  frames_cmd->add_option("--out", frames_args.out)->required();
  frames_cmd->add_flag("--compound", frames_args.compound, "Stream is over the compound space");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions: macro-F1, UAR and their average");
  add_common(eval_cmd, eval_args.common);
  eval_cmd->add_option("preds", eval_args.preds, "Prediction stream")->required();
  eval_cmd->add_option("--labels", eval_args.labels)->required();
  eval_cmd->add_option("--modality", eval_args.modality);
  eval_cmd->add_option("--out", eval_args.out, "Machine-readable report")->required();
  eval_cmd->add_option("--table", eval_args.table, "Text table (default <out>.txt)");
  eval_cmd->add_flag("--compound", eval_args.compound, "Score over the compound space");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic multimodal dataset");
  add_common(synth_cmd, synth_args.common);
  synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth_args.seed)->required();
  synth_cmd->add_option("--config", synth_args.config)->check(CLI::ExistingFile);
  synth_cmd->add_option("--videos", synth_args.videos);
  synth_cmd->add_option("--modality", synth_args.modalities, "name:reliability, repeatable");
  synth_cmd->add_option("--sigma", synth_args.sigma);
  synth_cmd->add_option("--fps", synth_args.fps);
  synth_cmd->add_option("--feature-dim", synth_args.dim);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kToolVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (*validate_cmd) return cmd_validate(validate_args, out);
    if (*train_cmd) return cmd_mhpf_train(train_args, args, out);
    if (*predict_cmd) return cmd_mhpf_predict(predict_args, args, out);
    if (*ppa_cmd) return cmd_ppa(ppa_args, args, out);
    if (*build_cmd) return cmd_pfsa_build(build_args, args, out);
    if (*pfsa_cmd) return cmd_pfsa_predict(pfsa_args, args, out);
    if (*zs_cmd) return cmd_zeroshot(zs_args, args, out);
    if (*frames_cmd) return cmd_frames(frames_args, args, out);
    if (*eval_cmd) return cmd_eval(eval_args, args, out);
    if (*synth_cmd) return cmd_synth(synth_args, args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  }
  return kUsageError;
}

}  // namespace cerfuse::cli
