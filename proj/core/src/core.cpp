#include "cerfuse/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "cerfuse/io.hpp"

namespace cerfuse {

using nlohmann::json;

EmotionSpace::EmotionSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw Error(ErrorCode::kInvalidSpace, "a label space needs at least 2 labels");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) {
      throw Error(ErrorCode::kInvalidSpace, "empty label at position " + std::to_string(i));
    }
    if (!index_.emplace(labels_[i], i).second) {
      throw Error(ErrorCode::kInvalidSpace, "duplicate label '" + labels_[i] + "'");
    }
  }
}

SpaceRef EmotionSpace::default_basic() {
  static const SpaceRef space = make_space({"Neutral", "Anger", "Disgust", "Fear", "Happiness",
                                            "Sadness", "Surprise", "Other"});
  return space;
}

std::optional<std::size_t> EmotionSpace::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmotionSpace::index_of(std::string_view label) const {
  if (auto i = find(label)) return *i;
  throw Error(ErrorCode::kUnknownLabel, "label '" + std::string(label) + "' not in space");
}

SpaceRef make_space(std::vector<std::string> labels) {
  return std::make_shared<const EmotionSpace>(std::move(labels));
}

bool same_space(const SpaceRef& a, const SpaceRef& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

CompoundScheme::CompoundScheme(SpaceRef source, const std::vector<Entry>& entries)
    : source_(std::move(source)) {
  if (!source_) throw Error(ErrorCode::kInvalidScheme, "scheme has no source space");
  std::vector<std::string> names;
  std::set<std::pair<std::size_t, std::size_t>> seen_pairs;
  for (const auto& e : entries) {
    auto a = source_->find(e.pair.first);
    auto b = source_->find(e.pair.second);
    if (!a || !b) {
      throw Error(ErrorCode::kInvalidScheme,
                  "compound '" + e.name + "' references a label outside the basic space");
    }
    if (*a == *b) {
      throw Error(ErrorCode::kInvalidScheme,
                  "compound '" + e.name + "' pairs a label with itself");
    }
    if (!seen_pairs.emplace(std::min(*a, *b), std::max(*a, *b)).second) {
      throw Error(ErrorCode::kInvalidScheme, "compound '" + e.name + "' repeats an earlier pair");
    }
    compounds_.push_back({e.name, *a, *b});
    names.push_back(e.name);
  }
  try {
    compounds_space_ = make_space(std::move(names));
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidScheme, e.what());
  }
}

CompoundScheme CompoundScheme::default_cexpr(SpaceRef source) {
  return CompoundScheme(std::move(source),
                        {{"Fearfully Surprised", {"Fear", "Surprise"}},
                         {"Happily Surprised", {"Happiness", "Surprise"}},
                         {"Sadly Surprised", {"Sadness", "Surprise"}},
                         {"Disgustedly Surprised", {"Disgust", "Surprise"}},
                         {"Angrily Surprised", {"Anger", "Surprise"}},
                         {"Sadly Fearful", {"Sadness", "Fear"}},
                         {"Sadly Angry", {"Sadness", "Anger"}}});
}

std::vector<std::size_t> CompoundScheme::referenced_labels() const {
  std::set<std::size_t> out;
  for (const auto& c : compounds_) {
    out.insert(c.first);
    out.insert(c.second);
  }
  return {out.begin(), out.end()};
}

namespace {

void check_entries(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::kNonFinite, "entry " + std::to_string(i) + " is not finite");
    }
    if (values[i] < 0.0) {
      throw Error(ErrorCode::kNegativeEntry, "entry " + std::to_string(i) + " is negative");
    }
  }
}

}  // namespace

ProbVector::ProbVector(std::vector<double> values, SpaceRef space, double tolerance)
    : values_(std::move(values)), space_(std::move(space)) {
  if (!space_ || values_.size() != space_->size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected " + std::to_string(space_ ? space_->size() : 0) +
                    " probabilities, got " + std::to_string(values_.size()));
  }
  check_entries(values_);
  double sum = std::accumulate(values_.begin(), values_.end(), 0.0);
  if (std::abs(sum - 1.0) > tolerance) {
    throw Error(ErrorCode::kSimplexViolation,
                "probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

ProbVector ProbVector::uniform(SpaceRef space) {
  std::vector<double> v(space->size(), 1.0 / static_cast<double>(space->size()));
  return ProbVector(std::move(v), std::move(space), kInternalTolerance);
}

FeatureVector::FeatureVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::kDimensionMismatch, "feature vector is empty");
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "feature entry is not finite");
  }
}

double FeatureVector::norm() const { return l2_norm(values_); }

Temperature::Temperature(double value) : value_(value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::kBadTemperature, "temperature must be positive and finite");
  }
}

ProbVector normalize(std::span<const double> raw, SpaceRef space) {
  check_entries(raw);
  double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (!(sum > 0.0)) throw Error(ErrorCode::kAllZero, "cannot normalize an all-zero vector");
  std::vector<double> out(raw.begin(), raw.end());
  for (double& v : out) v /= sum;
  return ProbVector(std::move(out), std::move(space), kInternalTolerance);
}

std::size_t argmax_index(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

const std::string& argmax_label(const ProbVector& p) {
  return p.space()->label(argmax_index(p.values()));
}

ProbVector align_to_space(const ProbVector& p, const SpaceRef& target) {
  if (same_space(p.space(), target)) return ProbVector(
      std::vector<double>(p.values().begin(), p.values().end()), target, kIngestTolerance);
  std::vector<double> out(target->size(), 0.0);
  const auto& source = *p.space();
  for (std::size_t i = 0; i < source.size(); ++i) {
    auto j = target->find(source.label(i));
    if (!j) {
      throw Error(ErrorCode::kUnmappableLabel,
                  "label '" + source.label(i) + "' has no counterpart in the target space");
    }
    out[*j] = p[i];
  }
  return normalize(out, target);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = dot(a, b);
  double na = l2_norm(a);
  double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(ab / (na * nb), -1.0, 1.0);
}

std::vector<double> softmax(std::span<const double> scores, Temperature t) {
  std::vector<double> out(scores.size());
  if (scores.empty()) return out;
  double top = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp((scores[i] - top) / t.value());
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

LabelConfig parse_label_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, std::string("label config: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("basic") || !doc["basic"].is_array()) {
    throw Error(ErrorCode::kMalformed, "label config needs a \"basic\" array");
  }
  LabelConfig cfg;
  try {
    cfg.basic = make_space(doc["basic"].get<std::vector<std::string>>());
    if (doc.contains("compounds")) {
      std::vector<CompoundScheme::Entry> entries;
      for (const auto& c : doc["compounds"]) {
        auto pair = c.at("pair").get<std::vector<std::string>>();
        if (pair.size() != 2) {
          throw Error(ErrorCode::kInvalidScheme, "compound pair must have exactly 2 labels");
        }
        entries.push_back({c.at("name").get<std::string>(), {pair[0], pair[1]}});
      }
      cfg.scheme.emplace(cfg.basic, entries);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, std::string("label config: ") + e.what());
  }
  return cfg;
}

LabelConfig load_label_config(const std::string& path) {
  return parse_label_config(read_text_file(path));
}

std::string label_config_json(const SpaceRef& basic, const CompoundScheme* scheme) {
  json doc;
  doc["basic"] = basic->labels();
  if (scheme) {
    json list = json::array();
    for (const auto& c : scheme->compounds()) {
      list.push_back({{"name", c.name},
                      {"pair", {basic->label(c.first), basic->label(c.second)}}});
    }
    doc["compounds"] = list;
  }
  return doc.dump(2) + "\n";
}

}  // namespace cerfuse
