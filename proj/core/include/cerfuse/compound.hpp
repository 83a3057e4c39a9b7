#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cerfuse/core.hpp"

namespace cerfuse {

// Pair-wise probability aggregation: compound k scores p[first_k] + p[second_k].
// Basic labels outside every pair (Neutral, Other) contribute nothing.
std::vector<double> ppa_raw(const ProbVector& p, const CompoundScheme& scheme);

// ppa_raw renormalized over the compound space. Throws AllZero when every
// referenced basic label has zero mass, UnmappableLabel for a foreign space.
ProbVector ppa(const ProbVector& p, const CompoundScheme& scheme);

struct PrototypeSample {
  FeatureVector features;
  std::size_t gold;       // index into the scheme's source space
  std::size_t predicted;  // index into the scheme's source space
};

/// Basic-emotion means and unit-norm compound prototypes.
class PrototypeBank {
 public:
  static constexpr int kFormatVersion = 1;

  PrototypeBank(CompoundScheme scheme, std::size_t dim,
                std::map<std::size_t, FeatureVector> basic,
                std::map<std::size_t, std::size_t> counts, std::vector<FeatureVector> compound);

  const CompoundScheme& scheme() const { return scheme_; }
  std::size_t dim() const { return dim_; }
  // Keyed by source-space index; only labels with correct samples appear.
  const std::map<std::size_t, FeatureVector>& basic_prototypes() const { return basic_; }
  const std::map<std::size_t, std::size_t>& counts() const { return counts_; }
  // In scheme order.
  const std::vector<FeatureVector>& compound_prototypes() const { return compound_; }

  bool operator==(const PrototypeBank& other) const;

 private:
  CompoundScheme scheme_;
  std::size_t dim_;
  std::map<std::size_t, FeatureVector> basic_;
  std::map<std::size_t, std::size_t> counts_;
  std::vector<FeatureVector> compound_;
};

/// Averages the features of correctly classified samples (gold == predicted)
/// per basic label, then averages each compound's two basic prototypes and
/// scales the result to unit L2 norm.
///
/// The per-label sums are taken over features in lexicographic order, so the
/// bank does not depend on the order of `samples`.
///
/// Throws MissingClass, ZeroNorm, DimensionMismatch.
PrototypeBank build_prototypes(std::span<const PrototypeSample> samples,
                               const CompoundScheme& scheme);

// Softmax of cos(f, prototype_k) / T over compounds. Throws ZeroFeature,
// DimensionMismatch.
ProbVector pfsa(const FeatureVector& f, const PrototypeBank& bank, Temperature t);
std::vector<double> pfsa_similarities(const FeatureVector& f, const PrototypeBank& bank);

std::string serialize_bank(const PrototypeBank& bank);
// Throws VersionMismatch, Corrupt.
PrototypeBank deserialize_bank(std::string_view text);
void save_bank(const PrototypeBank& bank, const std::string& path);
PrototypeBank load_bank(const std::string& path);

}  // namespace cerfuse
