#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cerfuse/core.hpp"

namespace cerfuse {

// Rows are gold labels, columns predicted labels.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(SpaceRef space);

  void add(std::size_t gold, std::size_t predicted, std::size_t n = 1);

  const SpaceRef& space() const { return space_; }
  std::size_t size() const { return space_->size(); }
  std::size_t at(std::size_t gold, std::size_t predicted) const {
    return counts_[gold * size() + predicted];
  }
  std::size_t total() const { return total_; }

  bool operator==(const ConfusionMatrix& other) const {
    return same_space(space_, other.space_) && counts_ == other.counts_;
  }

 private:
  SpaceRef space_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

// Throws LengthMismatch (also for empty input) and UnknownLabel.
ConfusionMatrix confusion(std::span<const std::string> golds, std::span<const std::string> preds,
                          const SpaceRef& space);

struct ClassScores {
  double precision;
  double recall;
  double f1;
  std::size_t support;
};

// Everything in percent.
struct EvalReport {
  std::vector<ClassScores> per_class;
  double macro_f1;
  double uar;
  double average;
  std::size_t samples;
  ConfusionMatrix matrix;
};

/// Macro-F1 and UAR average over every class in the space, including classes
/// with no gold samples (they score recall 0 and F1 0).
/// Throws EmptyMatrix.
EvalReport evaluate(const ConfusionMatrix& cm);

std::string report_table(const EvalReport& report);
std::string report_json(const EvalReport& report);

}  // namespace cerfuse
