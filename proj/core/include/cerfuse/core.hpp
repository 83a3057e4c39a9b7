#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cerfuse/error.hpp"

namespace cerfuse {

// Simplex tolerance for vectors read from external files.
inline constexpr double kIngestTolerance = 1e-6;
// Simplex tolerance for vectors produced by the engine itself.
inline constexpr double kInternalTolerance = 1e-9;

/// Ordered, duplicate-free list of class names. The order is canonical: every
/// array-indexed artifact (probability vectors, model files, confusion
/// matrices) is laid out in it.
class EmotionSpace {
 public:
  explicit EmotionSpace(std::vector<std::string> labels);

  /// Neutral, Anger, Disgust, Fear, Happiness, Sadness, Surprise, Other.
  static std::shared_ptr<const EmotionSpace> default_basic();

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t index) const { return labels_.at(index); }
  const std::vector<std::string>& labels() const { return labels_; }

  std::optional<std::size_t> find(std::string_view label) const;
  // Throws UnknownLabel.
  std::size_t index_of(std::string_view label) const;

  bool operator==(const EmotionSpace& other) const {
    return labels_ == other.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

using SpaceRef = std::shared_ptr<const EmotionSpace>;

SpaceRef make_space(std::vector<std::string> labels);

// Spaces are compared by content, so two files loaded separately still match.
bool same_space(const SpaceRef& a, const SpaceRef& b);

struct Compound {
  std::string name;
  std::size_t first;   // index into the source space
  std::size_t second;  // index into the source space
};

/// Compound emotions, each defined by an unordered pair of basic labels.
class CompoundScheme {
 public:
  struct Entry {
    std::string name;
    std::pair<std::string, std::string> pair;
  };

  CompoundScheme(SpaceRef source, const std::vector<Entry>& entries);

  /// The seven C-EXPR-DB compounds over the default basic space. The pairing
  /// follows the corpus convention, not anything derivable from the method.
  static CompoundScheme default_cexpr(SpaceRef source = EmotionSpace::default_basic());

  const SpaceRef& source_space() const { return source_; }
  // Space whose labels are the compound names, in scheme order.
  const SpaceRef& compound_space() const { return compounds_space_; }
  const std::vector<Compound>& compounds() const { return compounds_; }
  std::size_t size() const { return compounds_.size(); }

  // Basic labels referenced by at least one pair, ascending index order.
  std::vector<std::size_t> referenced_labels() const;

 private:
  SpaceRef source_;
  SpaceRef compounds_space_;
  std::vector<Compound> compounds_;
};

/// A point on the probability simplex over a label space.
class ProbVector {
 public:
  // Validates non-negativity, finiteness and |sum - 1| <= tolerance.
  // Throws NonFinite, NegativeEntry, SimplexViolation or DimensionMismatch.
  ProbVector(std::vector<double> values, SpaceRef space,
             double tolerance = kIngestTolerance);

  static ProbVector uniform(SpaceRef space);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  const SpaceRef& space() const { return space_; }

  double at(std::string_view label) const { return values_[space_->index_of(label)]; }

 private:
  std::vector<double> values_;
  SpaceRef space_;
};

/// A finite, non-empty embedding.
class FeatureVector {
 public:
  FeatureVector() = default;
  // Throws DimensionMismatch for d == 0 and NonFinite.
  explicit FeatureVector(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  double norm() const;

  bool operator==(const FeatureVector& other) const = default;

 private:
  std::vector<double> values_;
};

/// Softmax temperature, strictly positive.
class Temperature {
 public:
  explicit Temperature(double value);
  double value() const { return value_; }

 private:
  double value_;
};

// Throws AllZero, NegativeEntry, NonFinite.
ProbVector normalize(std::span<const double> raw, SpaceRef space);

// Lowest index wins ties.
std::size_t argmax_index(std::span<const double> values);
const std::string& argmax_label(const ProbVector& p);

// Copies entries by label name into `target`; labels missing from the source
// get zero. Throws UnmappableLabel when a source label is absent from target.
ProbVector align_to_space(const ProbVector& p, const SpaceRef& target);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
// Throws DimensionMismatch; returns 0 when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);

// exp(x/T) / sum exp(x/T), evaluated with max subtraction.
std::vector<double> softmax(std::span<const double> scores, Temperature t = Temperature(1.0));

struct LabelConfig {
  SpaceRef basic;
  std::optional<CompoundScheme> scheme;
};

// {"basic": [...], "compounds": [{"name": ..., "pair": [a, b]}, ...]}.
// "compounds" is optional.
LabelConfig parse_label_config(std::string_view text);
LabelConfig load_label_config(const std::string& path);
std::string label_config_json(const SpaceRef& basic, const CompoundScheme* scheme);

}  // namespace cerfuse
