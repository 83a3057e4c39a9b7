#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cerfuse/core.hpp"

namespace cerfuse {

/// One precomputed text embedding per label of a space.
class LabelEmbeddingSet {
 public:
  // `embeddings[i]` belongs to space->label(i). Throws DimensionMismatch,
  // ZeroFeature.
  LabelEmbeddingSet(SpaceRef space, std::vector<FeatureVector> embeddings);

  const SpaceRef& space() const { return space_; }
  const std::vector<FeatureVector>& embeddings() const { return embeddings_; }
  std::size_t dim() const { return embeddings_.front().dim(); }

 private:
  SpaceRef space_;
  std::vector<FeatureVector> embeddings_;
};

// {"label": str, "embedding": [...]} per line. With `space`, every label of the
// space must appear exactly once; without it, the file order defines the space.
LabelEmbeddingSet parse_label_embeddings_text(std::string_view text, const SpaceRef& space = nullptr);
LabelEmbeddingSet load_label_embeddings(const std::string& path, const SpaceRef& space = nullptr);

// softmax over labels of cos(query, e_label) / T. Throws ZeroQuery (as
// ZeroFeature) and DimensionMismatch.
ProbVector match(const FeatureVector& query, const LabelEmbeddingSet& labels,
                 Temperature t = Temperature(1.0));

}  // namespace cerfuse
