#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cerfuse/core.hpp"
#include "cerfuse/ingest.hpp"

namespace cerfuse {

/// Multi-head probability fusion.
///
/// Each head h mixes the modality distributions class by class with convex
/// weights w[h, m, c]; the heads are then mixed, again class by class, with
/// convex coefficients alpha[h, c]:
///
///   O_h[c] = sum_m w[h, m, c] * P_m[c]
///   F[c]   = sum_h alpha[h, c] * O_h[c]
///
/// and the output is F renormalized onto the simplex. Both weight families are
/// stored as unconstrained logits and obtained by a softmax over the modality
/// axis (w) and over the head axis (alpha), so any parameter value is a valid
/// convex combination.
class MhpfModel {
 public:
  static constexpr int kFormatVersion = 1;

  /// Zero logits plus N(0, 1e-2) jitter drawn from `seed`.
  /// Throws BadDimensions (no heads, no modalities, duplicate modality tags).
  static MhpfModel init(std::size_t heads, std::vector<std::string> modality_order,
                        SpaceRef space, std::uint64_t seed);

  /// Takes ownership of raw logits laid out (h, m, c) and (h, c), row-major.
  MhpfModel(std::size_t heads, std::vector<std::string> modality_order, SpaceRef space,
            std::vector<double> modality_logits, std::vector<double> head_logits);

  std::size_t heads() const { return heads_; }
  std::size_t modalities() const { return modality_order_.size(); }
  std::size_t classes() const { return space_->size(); }
  const std::vector<std::string>& modality_order() const { return modality_order_; }
  const SpaceRef& space() const { return space_; }

  std::span<const double> modality_logits() const { return modality_logits_; }
  std::span<const double> head_logits() const { return head_logits_; }
  std::span<double> mutable_modality_logits() { return modality_logits_; }
  std::span<double> mutable_head_logits() { return head_logits_; }

  std::size_t modality_offset(std::size_t h, std::size_t m, std::size_t c) const {
    return (h * modalities() + m) * classes() + c;
  }
  std::size_t head_offset(std::size_t h, std::size_t c) const { return h * classes() + c; }

  // Derived convex weights, same layouts as the logits.
  std::vector<double> modality_weights() const;
  std::vector<double> head_weights() const;

  // sum_h alpha[h, c] * w[h, m, c]: the total share of modality m in class c.
  std::vector<double> effective_weights() const;  // (m, c)

  bool operator==(const MhpfModel& other) const;

 private:
  std::size_t heads_;
  std::vector<std::string> modality_order_;
  SpaceRef space_;
  std::vector<double> modality_logits_;
  std::vector<double> head_logits_;
};

/// Modality distributions for one sample, stacked in the model's modality
/// order: probs[m * C + c].
struct FusionExample {
  std::vector<double> probs;
  std::size_t gold = 0;
};

struct MhpfGradient {
  std::vector<double> modality_logits;  // (h, m, c)
  std::vector<double> head_logits;      // (h, c)
};

// Unnormalized F for stacked inputs (size M * C).
std::vector<double> fuse_raw(const MhpfModel& model, std::span<const double> stacked);
std::vector<double> fuse(const MhpfModel& model, std::span<const double> stacked);

// Inputs must cover exactly the model's modalities, all over model.space().
// Throws ModalityMismatch, AllZeroFused.
ProbVector forward(const MhpfModel& model, const std::map<std::string, ProbVector>& inputs);

// Stacks a sample's modalities in model order; gold is looked up in the model
// space. Throws ModalityMismatch, UnknownLabel.
FusionExample make_example(const MhpfModel& model, const AlignedSample& sample);
std::vector<double> stack_inputs(const MhpfModel& model,
                                 const std::map<std::string, ProbVector>& inputs);

// Mean of -log(max(p_gold, 1e-12)). Throws EmptyBatch.
double nll_loss(const MhpfModel& model, std::span<const FusionExample> batch);

// Exact gradient of nll_loss with respect to both logit arrays.
MhpfGradient gradient(const MhpfModel& model, std::span<const FusionExample> batch);

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t max_epochs = 100;
  std::size_t batch_size = 64;
  std::size_t patience = 25;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch;  // 0 is the untrained starting point
  double train_loss;
  double validation_loss;
};

struct TrainResult {
  MhpfModel model;  // parameters with the lowest validation loss
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

/// Shuffled mini-batch gradient descent on the NLL. Stops after `max_epochs`
/// or once the validation loss has not improved for `patience` epochs.
/// Throws EmptySplit, BadConfig.
TrainResult train(const MhpfModel& initial, std::span<const FusionExample> train_set,
                  std::span<const FusionExample> validation_set, const TrainConfig& config);

std::string history_json(const TrainResult& result);

std::string serialize_model(const MhpfModel& model);
// Throws VersionMismatch, Corrupt.
MhpfModel deserialize_model(std::string_view text);
void save_model(const MhpfModel& model, const std::string& path);
MhpfModel load_model(const std::string& path);

}  // namespace cerfuse
