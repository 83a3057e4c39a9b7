#include "cerfuse/zeroshot.hpp"

#include <map>

#include <nlohmann/json.hpp>

#include "cerfuse/io.hpp"

namespace cerfuse {

using nlohmann::json;

LabelEmbeddingSet::LabelEmbeddingSet(SpaceRef space, std::vector<FeatureVector> embeddings)
    : space_(std::move(space)), embeddings_(std::move(embeddings)) {
  if (!space_ || embeddings_.size() != space_->size()) {
    throw Error(ErrorCode::kDimensionMismatch, "need exactly one embedding per label");
  }
  for (std::size_t i = 0; i < embeddings_.size(); ++i) {
    if (embeddings_[i].dim() != embeddings_.front().dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "embedding of '" + space_->label(i) + "' has a different dimension");
    }
    if (!(embeddings_[i].norm() > 0.0)) {
      throw Error(ErrorCode::kZeroFeature, "embedding of '" + space_->label(i) + "' is zero");
    }
  }
}

LabelEmbeddingSet parse_label_embeddings_text(std::string_view text, const SpaceRef& space) {
  std::vector<std::string> order;
  std::map<std::string, FeatureVector> by_label;
  for_each_line(text, [&](std::size_t line, std::string_view content) {
    json obj;
    try {
      obj = json::parse(content);
      std::string label = obj.at("label").get<std::string>();
      FeatureVector e(obj.at("embedding").get<std::vector<double>>());
      if (!by_label.emplace(label, std::move(e)).second) {
        throw Error(ErrorCode::kDuplicateKey, "label '" + label + "' listed twice", line);
      }
      order.push_back(label);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformed, e.what(), line);
    } catch (const Error& e) {
      if (e.line()) throw;
      throw Error(e.code(), e.what(), line);
    }
  });
  SpaceRef target = space ? space : make_space(order);
  std::vector<FeatureVector> embeddings;
  for (const auto& label : target->labels()) {
    auto it = by_label.find(label);
    if (it == by_label.end()) {
      throw Error(ErrorCode::kUnknownLabel, "no embedding for label '" + label + "'");
    }
    embeddings.push_back(it->second);
  }
  if (by_label.size() != target->size()) {
    throw Error(ErrorCode::kUnknownLabel, "embedding file lists labels outside the space");
  }
  return LabelEmbeddingSet(std::move(target), std::move(embeddings));
}

LabelEmbeddingSet load_label_embeddings(const std::string& path, const SpaceRef& space) {
  return parse_label_embeddings_text(read_text_file(path), space);
}

ProbVector match(const FeatureVector& query, const LabelEmbeddingSet& labels, Temperature t) {
  if (query.dim() != labels.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query has dimension " + std::to_string(query.dim()) + ", embeddings have " +
                    std::to_string(labels.dim()));
  }
  if (!(query.norm() > 0.0)) throw Error(ErrorCode::kZeroFeature, "query embedding is zero");
  std::vector<double> sims;
  sims.reserve(labels.embeddings().size());
  for (const auto& e : labels.embeddings()) sims.push_back(cosine(query.values(), e.values()));
  return ProbVector(softmax(sims, t), labels.space(), kInternalTolerance);
}

}  // namespace cerfuse
