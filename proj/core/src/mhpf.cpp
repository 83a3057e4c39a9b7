#include "cerfuse/mhpf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "cerfuse/io.hpp"

namespace cerfuse {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kProbFloor = 1e-12;
constexpr double kInitJitter = 1e-2;
constexpr const char* kFormatName = "cerfuse-mhpf";

void check_dimensions(std::size_t heads, const std::vector<std::string>& order,
                      const SpaceRef& space) {
  if (heads == 0) throw Error(ErrorCode::kBadDimensions, "need at least one head");
  if (order.empty()) throw Error(ErrorCode::kBadDimensions, "need at least one modality");
  if (!space) throw Error(ErrorCode::kBadDimensions, "model has no label space");
  std::set<std::string> unique(order.begin(), order.end());
  if (unique.size() != order.size()) {
    throw Error(ErrorCode::kBadDimensions, "modality tags must be unique");
  }
}

// Softmax along one axis of a strided array. `count` elements starting at
// `first`, `stride` apart.
void softmax_axis(std::span<const double> logits, std::span<double> out, std::size_t first,
                  std::size_t count, std::size_t stride) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) top = std::max(top, logits[first + i * stride]);
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    double e = std::exp(logits[first + i * stride] - top);
    out[first + i * stride] = e;
    sum += e;
  }
  for (std::size_t i = 0; i < count; ++i) out[first + i * stride] /= sum;
}

struct Weights {
  std::vector<double> w;      // (h, m, c)
  std::vector<double> alpha;  // (h, c)
};

Weights derive(const MhpfModel& model) {
  return {model.modality_weights(), model.head_weights()};
}

// Per-head mixtures O[h * C + c] and the raw fused vector F.
void fuse_into(const MhpfModel& model, const Weights& wt, std::span<const double> stacked,
               std::vector<double>& heads_out, std::vector<double>& fused) {
  const std::size_t H = model.heads(), M = model.modalities(), C = model.classes();
  heads_out.assign(H * C, 0.0);
  fused.assign(C, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t c = 0; c < C; ++c) {
      double o = 0.0;
      for (std::size_t m = 0; m < M; ++m) o += wt.w[model.modality_offset(h, m, c)] * stacked[m * C + c];
      heads_out[h * C + c] = o;
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    double f = 0.0;
    for (std::size_t h = 0; h < H; ++h) f += wt.alpha[model.head_offset(h, c)] * heads_out[h * C + c];
    fused[c] = f;
  }
}

void check_stacked(const MhpfModel& model, std::span<const double> stacked) {
  if (stacked.size() != model.modalities() * model.classes()) {
    throw Error(ErrorCode::kModalityMismatch,
                "expected " + std::to_string(model.modalities()) + " x " +
                    std::to_string(model.classes()) + " stacked probabilities");
  }
}

void check_example(const MhpfModel& model, const FusionExample& ex) {
  check_stacked(model, ex.probs);
  if (ex.gold >= model.classes()) throw Error(ErrorCode::kUnknownLabel, "gold index out of range");
}

}  // namespace

MhpfModel::MhpfModel(std::size_t heads, std::vector<std::string> modality_order, SpaceRef space,
                     std::vector<double> modality_logits, std::vector<double> head_logits)
    : heads_(heads),
      modality_order_(std::move(modality_order)),
      space_(std::move(space)),
      modality_logits_(std::move(modality_logits)),
      head_logits_(std::move(head_logits)) {
  check_dimensions(heads_, modality_order_, space_);
  if (modality_logits_.size() != heads_ * modalities() * classes() ||
      head_logits_.size() != heads_ * classes()) {
    throw Error(ErrorCode::kBadDimensions, "logit arrays do not match (H, M, C)");
  }
  for (double v : modality_logits_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "non-finite modality logit");
  }
  for (double v : head_logits_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "non-finite head logit");
  }
}

MhpfModel MhpfModel::init(std::size_t heads, std::vector<std::string> modality_order,
                          SpaceRef space, std::uint64_t seed) {
  check_dimensions(heads, modality_order, space);
  const std::size_t M = modality_order.size(), C = space->size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, kInitJitter);
  std::vector<double> a(heads * M * C), b(heads * C);
  for (double& v : a) v = jitter(rng);
  for (double& v : b) v = jitter(rng);
  return MhpfModel(heads, std::move(modality_order), std::move(space), std::move(a), std::move(b));
}

std::vector<double> MhpfModel::modality_weights() const {
  std::vector<double> w(modality_logits_.size());
  const std::size_t M = modalities(), C = classes();
  for (std::size_t h = 0; h < heads_; ++h) {
    for (std::size_t c = 0; c < C; ++c) softmax_axis(modality_logits_, w, modality_offset(h, 0, c), M, C);
  }
  return w;
}

std::vector<double> MhpfModel::head_weights() const {
  std::vector<double> alpha(head_logits_.size());
  for (std::size_t c = 0; c < classes(); ++c) softmax_axis(head_logits_, alpha, c, heads_, classes());
  return alpha;
}

std::vector<double> MhpfModel::effective_weights() const {
  const std::size_t M = modalities(), C = classes();
  auto w = modality_weights();
  auto alpha = head_weights();
  std::vector<double> out(M * C, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t h = 0; h < heads_; ++h) s += alpha[head_offset(h, c)] * w[modality_offset(h, m, c)];
      out[m * C + c] = s;
    }
  }
  return out;
}

bool MhpfModel::operator==(const MhpfModel& other) const {
  return heads_ == other.heads_ && modality_order_ == other.modality_order_ &&
         same_space(space_, other.space_) && modality_logits_ == other.modality_logits_ &&
         head_logits_ == other.head_logits_;
}

std::vector<double> fuse_raw(const MhpfModel& model, std::span<const double> stacked) {
  check_stacked(model, stacked);
  std::vector<double> heads_out, fused;
  fuse_into(model, derive(model), stacked, heads_out, fused);
  return fused;
}

std::vector<double> fuse(const MhpfModel& model, std::span<const double> stacked) {
  std::vector<double> fused = fuse_raw(model, stacked);
  double sum = std::accumulate(fused.begin(), fused.end(), 0.0);
  if (!(sum > 0.0)) throw Error(ErrorCode::kAllZeroFused, "fused vector has no mass");
  for (double& v : fused) v /= sum;
  return fused;
}

std::vector<double> stack_inputs(const MhpfModel& model,
                                 const std::map<std::string, ProbVector>& inputs) {
  if (inputs.size() != model.modalities()) {
    throw Error(ErrorCode::kModalityMismatch,
                "model fuses " + std::to_string(model.modalities()) + " modalities, got " +
                    std::to_string(inputs.size()));
  }
  const std::size_t C = model.classes();
  std::vector<double> stacked(model.modalities() * C);
  for (std::size_t m = 0; m < model.modalities(); ++m) {
    auto it = inputs.find(model.modality_order()[m]);
    if (it == inputs.end()) {
      throw Error(ErrorCode::kModalityMismatch,
                  "missing modality '" + model.modality_order()[m] + "'");
    }
    if (!same_space(it->second.space(), model.space())) {
      throw Error(ErrorCode::kModalityMismatch,
                  "modality '" + it->first + "' is over a different label space");
    }
    std::copy(it->second.values().begin(), it->second.values().end(), stacked.begin() + m * C);
  }
  return stacked;
}

ProbVector forward(const MhpfModel& model, const std::map<std::string, ProbVector>& inputs) {
  return ProbVector(fuse(model, stack_inputs(model, inputs)), model.space(), kInternalTolerance);
}

FusionExample make_example(const MhpfModel& model, const AlignedSample& sample) {
  std::map<std::string, ProbVector> inputs;
  for (const auto& [name, entry] : sample.modalities) inputs.emplace(name, entry.probs);
  FusionExample ex;
  ex.probs = stack_inputs(model, inputs);
  if (sample.gold) ex.gold = model.space()->index_of(*sample.gold);
  return ex;
}

double nll_loss(const MhpfModel& model, std::span<const FusionExample> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "loss over an empty batch");
  Weights wt = derive(model);
  std::vector<double> heads_out, fused;
  double total = 0.0;
  for (const auto& ex : batch) {
    check_example(model, ex);
    fuse_into(model, wt, ex.probs, heads_out, fused);
    double sum = std::accumulate(fused.begin(), fused.end(), 0.0);
    if (!(sum > 0.0)) throw Error(ErrorCode::kAllZeroFused, "fused vector has no mass");
    total += -std::log(std::max(fused[ex.gold] / sum, kProbFloor));
  }
  return total / static_cast<double>(batch.size());
}

MhpfGradient gradient(const MhpfModel& model, std::span<const FusionExample> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "gradient over an empty batch");
  const std::size_t H = model.heads(), M = model.modalities(), C = model.classes();
  Weights wt = derive(model);
  MhpfGradient g{std::vector<double>(H * M * C, 0.0), std::vector<double>(H * C, 0.0)};
  std::vector<double> heads_out, fused, d_fused(C), per_head(H), per_modality(M);

  for (const auto& ex : batch) {
    check_example(model, ex);
    fuse_into(model, wt, ex.probs, heads_out, fused);
    double sum = std::accumulate(fused.begin(), fused.end(), 0.0);
    if (!(sum > 0.0)) throw Error(ErrorCode::kAllZeroFused, "fused vector has no mass");
    // Inside the floor the loss is constant, so it contributes nothing.
    if (fused[ex.gold] / sum < kProbFloor) continue;

    // loss = log(sum F) - log(F[gold])
    for (std::size_t c = 0; c < C; ++c) d_fused[c] = 1.0 / sum;
    d_fused[ex.gold] -= 1.0 / fused[ex.gold];

    for (std::size_t c = 0; c < C; ++c) {
      // Through alpha = softmax over heads of the head logits.
      double mean = 0.0;
      for (std::size_t h = 0; h < H; ++h) {
        per_head[h] = d_fused[c] * heads_out[h * C + c];
        mean += wt.alpha[model.head_offset(h, c)] * per_head[h];
      }
      for (std::size_t h = 0; h < H; ++h) {
        double a = wt.alpha[model.head_offset(h, c)];
        g.head_logits[model.head_offset(h, c)] += a * (per_head[h] - mean);
      }
      // Through w = softmax over modalities of the modality logits.
      for (std::size_t h = 0; h < H; ++h) {
        double a = wt.alpha[model.head_offset(h, c)];
        double mean_m = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
          per_modality[m] = d_fused[c] * a * ex.probs[m * C + c];
          mean_m += wt.w[model.modality_offset(h, m, c)] * per_modality[m];
        }
        for (std::size_t m = 0; m < M; ++m) {
          std::size_t k = model.modality_offset(h, m, c);
          g.modality_logits[k] += wt.w[k] * (per_modality[m] - mean_m);
        }
      }
    }
  }
  const double n = static_cast<double>(batch.size());
  for (double& v : g.modality_logits) v /= n;
  for (double& v : g.head_logits) v /= n;
  return g;
}

TrainResult train(const MhpfModel& initial, std::span<const FusionExample> train_set,
                  std::span<const FusionExample> validation_set, const TrainConfig& config) {
  if (train_set.empty()) throw Error(ErrorCode::kEmptySplit, "training split is empty");
  if (validation_set.empty()) throw Error(ErrorCode::kEmptySplit, "validation split is empty");
  if (!(config.learning_rate > 0.0) || config.max_epochs == 0 || config.batch_size == 0) {
    throw Error(ErrorCode::kBadConfig, "learning rate, epochs and batch size must be positive");
  }

  MhpfModel model = initial;
  TrainResult result{initial, {}, 0, 0};
  double best = nll_loss(model, validation_set);
  result.history.push_back({0, nll_loss(model, train_set), best});

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<FusionExample> batch;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    // Fisher-Yates with a plain modulo draw keeps the order identical across
    // standard library implementations.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      std::size_t end = std::min(order.size(), begin + config.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(train_set[order[i]]);
      MhpfGradient g = gradient(model, batch);
      auto a = model.mutable_modality_logits();
      for (std::size_t k = 0; k < a.size(); ++k) a[k] -= config.learning_rate * g.modality_logits[k];
      auto b = model.mutable_head_logits();
      for (std::size_t k = 0; k < b.size(); ++k) b[k] -= config.learning_rate * g.head_logits[k];
    }
    double val = nll_loss(model, validation_set);
    result.history.push_back({epoch, nll_loss(model, train_set), val});
    result.epochs_run = epoch;
    if (val < best) {
      best = val;
      result.model = model;
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (stale >= config.patience) break;
  }
  return result;
}

std::string history_json(const TrainResult& result) {
  ordered_json doc;
  doc["best_epoch"] = result.best_epoch;
  doc["epochs_run"] = result.epochs_run;
  ordered_json epochs = ordered_json::array();
  for (const auto& e : result.history) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"validation_loss", e.validation_loss}});
  }
  doc["history"] = epochs;
  return doc.dump(2) + "\n";
}

std::string serialize_model(const MhpfModel& model) {
  ordered_json doc;
  doc["format"] = kFormatName;
  doc["version"] = MhpfModel::kFormatVersion;
  doc["heads"] = model.heads();
  doc["modalities"] = model.modality_order();
  doc["labels"] = model.space()->labels();
  doc["modality_logits"] =
      std::vector<double>(model.modality_logits().begin(), model.modality_logits().end());
  doc["head_logits"] = std::vector<double>(model.head_logits().begin(), model.head_logits().end());
  return doc.dump(1) + "\n";
}

MhpfModel deserialize_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorrupt, std::string("model file: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.at("format").get<std::string>() != kFormatName) {
      throw Error(ErrorCode::kCorrupt, "not an MHPF model file");
    }
    int version = doc.at("version").get<int>();
    if (version != MhpfModel::kFormatVersion) {
      throw Error(ErrorCode::kVersionMismatch,
                  "model file version " + std::to_string(version) + ", expected " +
                      std::to_string(MhpfModel::kFormatVersion));
    }
    return MhpfModel(doc.at("heads").get<std::size_t>(),
                     doc.at("modalities").get<std::vector<std::string>>(),
                     make_space(doc.at("labels").get<std::vector<std::string>>()),
                     doc.at("modality_logits").get<std::vector<double>>(),
                     doc.at("head_logits").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorrupt, std::string("model file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kVersionMismatch || e.code() == ErrorCode::kCorrupt) throw;
    throw Error(ErrorCode::kCorrupt, std::string("model file: ") + e.what());
  }
}

void save_model(const MhpfModel& model, const std::string& path) {
  write_file_atomic(path, serialize_model(model));
}

MhpfModel load_model(const std::string& path) { return deserialize_model(read_text_file(path)); }

}  // namespace cerfuse
