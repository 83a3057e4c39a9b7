#include "cerfuse/compound.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "cerfuse/io.hpp"

namespace cerfuse {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kFormatName = "cerfuse-prototypes";
constexpr double kUnitTol = 1e-9;

ProbVector in_source_space(const ProbVector& p, const CompoundScheme& scheme) {
  if (same_space(p.space(), scheme.source_space())) return p;
  return align_to_space(p, scheme.source_space());
}

}  // namespace

std::vector<double> ppa_raw(const ProbVector& p, const CompoundScheme& scheme) {
  ProbVector q = in_source_space(p, scheme);
  std::vector<double> raw;
  raw.reserve(scheme.size());
  for (const auto& c : scheme.compounds()) raw.push_back(q[c.first] + q[c.second]);
  return raw;
}

ProbVector ppa(const ProbVector& p, const CompoundScheme& scheme) {
  std::vector<double> raw = ppa_raw(p, scheme);
  try {
    return normalize(raw, scheme.compound_space());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kAllZero) throw;
    throw Error(ErrorCode::kAllZero, "no mass on any basic label used by the compound scheme");
  }
}

PrototypeBank::PrototypeBank(CompoundScheme scheme, std::size_t dim,
                             std::map<std::size_t, FeatureVector> basic,
                             std::map<std::size_t, std::size_t> counts,
                             std::vector<FeatureVector> compound)
    : scheme_(std::move(scheme)),
      dim_(dim),
      basic_(std::move(basic)),
      counts_(std::move(counts)),
      compound_(std::move(compound)) {
  if (dim_ == 0) throw Error(ErrorCode::kDimensionMismatch, "prototype dimension is zero");
  if (compound_.size() != scheme_.size()) {
    throw Error(ErrorCode::kMissingClass, "every compound needs a prototype");
  }
  for (const auto& [label, f] : basic_) {
    if (f.dim() != dim_) throw Error(ErrorCode::kDimensionMismatch, "basic prototype dimension");
    auto it = counts_.find(label);
    if (it == counts_.end() || it->second == 0) {
      throw Error(ErrorCode::kMissingClass, "basic prototype without contributing samples");
    }
  }
  for (std::size_t k = 0; k < compound_.size(); ++k) {
    if (compound_[k].dim() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "compound prototype dimension");
    }
    if (std::abs(compound_[k].norm() - 1.0) > kUnitTol) {
      throw Error(ErrorCode::kZeroNorm,
                  "compound prototype '" + scheme_.compounds()[k].name + "' is not unit norm");
    }
  }
}

bool PrototypeBank::operator==(const PrototypeBank& other) const {
  return dim_ == other.dim_ && same_space(scheme_.source_space(), other.scheme_.source_space()) &&
         same_space(scheme_.compound_space(), other.scheme_.compound_space()) &&
         basic_ == other.basic_ && counts_ == other.counts_ && compound_ == other.compound_;
}

PrototypeBank build_prototypes(std::span<const PrototypeSample> samples,
                               const CompoundScheme& scheme) {
  const std::size_t labels = scheme.source_space()->size();
  std::size_t dim = 0;
  std::vector<std::vector<std::span<const double>>> correct(labels);
  for (const auto& s : samples) {
    if (s.gold >= labels || s.predicted >= labels) {
      throw Error(ErrorCode::kUnknownLabel, "prototype sample label index out of range");
    }
    if (dim == 0) dim = s.features.dim();
    if (s.features.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "feature dimensions " + std::to_string(dim) + " and " +
                      std::to_string(s.features.dim()));
    }
    if (s.gold == s.predicted) correct[s.gold].push_back(s.features.values());
  }

  std::map<std::size_t, FeatureVector> basic;
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t label = 0; label < labels; ++label) {
    auto& rows = correct[label];
    if (rows.empty()) continue;
    std::sort(rows.begin(), rows.end(), [](auto a, auto b) {
      return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    });
    std::vector<double> mean(dim, 0.0);
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < dim; ++i) mean[i] += row[i];
    }
    for (double& v : mean) v /= static_cast<double>(rows.size());
    basic.emplace(label, FeatureVector(std::move(mean)));
    counts.emplace(label, rows.size());
  }

  for (std::size_t label : scheme.referenced_labels()) {
    if (!basic.contains(label)) {
      throw Error(ErrorCode::kMissingClass, "no correctly classified samples for '" +
                                                scheme.source_space()->label(label) + "'");
    }
  }

  std::vector<FeatureVector> compound;
  for (const auto& c : scheme.compounds()) {
    const auto& a = basic.at(c.first);
    const auto& b = basic.at(c.second);
    std::vector<double> mid(dim);
    for (std::size_t i = 0; i < dim; ++i) mid[i] = (a[i] + b[i]) / 2.0;
    double n = l2_norm(mid);
    if (!(n > 0.0)) {
      throw Error(ErrorCode::kZeroNorm, "compound '" + c.name + "' averages to the zero vector");
    }
    for (double& v : mid) v /= n;
    compound.emplace_back(std::move(mid));
  }
  return PrototypeBank(scheme, dim, std::move(basic), std::move(counts), std::move(compound));
}

std::vector<double> pfsa_similarities(const FeatureVector& f, const PrototypeBank& bank) {
  if (f.dim() != bank.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query has dimension " + std::to_string(f.dim()) + ", bank has " +
                    std::to_string(bank.dim()));
  }
  if (!(f.norm() > 0.0)) throw Error(ErrorCode::kZeroFeature, "query feature is the zero vector");
  std::vector<double> sims;
  sims.reserve(bank.compound_prototypes().size());
  for (const auto& proto : bank.compound_prototypes()) sims.push_back(cosine(f.values(), proto.values()));
  return sims;
}

ProbVector pfsa(const FeatureVector& f, const PrototypeBank& bank, Temperature t) {
  return ProbVector(softmax(pfsa_similarities(f, bank), t), bank.scheme().compound_space(),
                    kInternalTolerance);
}

std::string serialize_bank(const PrototypeBank& bank) {
  const auto& space = *bank.scheme().source_space();
  ordered_json doc;
  doc["format"] = kFormatName;
  doc["version"] = PrototypeBank::kFormatVersion;
  doc["dim"] = bank.dim();
  doc["basic"] = space.labels();
  ordered_json compounds = ordered_json::array();
  for (const auto& c : bank.scheme().compounds()) {
    compounds.push_back({{"name", c.name}, {"pair", {space.label(c.first), space.label(c.second)}}});
  }
  doc["compounds"] = compounds;
  ordered_json basic = ordered_json::array();
  for (const auto& [label, f] : bank.basic_prototypes()) {
    basic.push_back({{"label", space.label(label)},
                     {"count", bank.counts().at(label)},
                     {"prototype", std::vector<double>(f.values().begin(), f.values().end())}});
  }
  doc["basic_prototypes"] = basic;
  ordered_json compound = ordered_json::array();
  for (std::size_t k = 0; k < bank.compound_prototypes().size(); ++k) {
    const auto& f = bank.compound_prototypes()[k];
    compound.push_back({{"name", bank.scheme().compounds()[k].name},
                        {"prototype", std::vector<double>(f.values().begin(), f.values().end())}});
  }
  doc["compound_prototypes"] = compound;
  return doc.dump(1) + "\n";
}

PrototypeBank deserialize_bank(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorrupt, std::string("prototype file: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.at("format").get<std::string>() != kFormatName) {
      throw Error(ErrorCode::kCorrupt, "not a prototype bank file");
    }
    int version = doc.at("version").get<int>();
    if (version != PrototypeBank::kFormatVersion) {
      throw Error(ErrorCode::kVersionMismatch,
                  "prototype file version " + std::to_string(version) + ", expected " +
                      std::to_string(PrototypeBank::kFormatVersion));
    }
    SpaceRef space = make_space(doc.at("basic").get<std::vector<std::string>>());
    std::vector<CompoundScheme::Entry> entries;
    for (const auto& c : doc.at("compounds")) {
      auto pair = c.at("pair").get<std::vector<std::string>>();
      if (pair.size() != 2) throw Error(ErrorCode::kCorrupt, "compound pair must have 2 labels");
      entries.push_back({c.at("name").get<std::string>(), {pair[0], pair[1]}});
    }
    CompoundScheme scheme(space, entries);
    std::map<std::size_t, FeatureVector> basic;
    std::map<std::size_t, std::size_t> counts;
    for (const auto& b : doc.at("basic_prototypes")) {
      std::size_t label = space->index_of(b.at("label").get<std::string>());
      basic.emplace(label, FeatureVector(b.at("prototype").get<std::vector<double>>()));
      counts.emplace(label, b.at("count").get<std::size_t>());
    }
    const auto& list = doc.at("compound_prototypes");
    if (list.size() != scheme.size()) throw Error(ErrorCode::kCorrupt, "compound prototype count");
    std::vector<FeatureVector> compound;
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (list[k].at("name").get<std::string>() != scheme.compounds()[k].name) {
        throw Error(ErrorCode::kCorrupt, "compound prototypes out of scheme order");
      }
      compound.emplace_back(list[k].at("prototype").get<std::vector<double>>());
    }
    return PrototypeBank(std::move(scheme), doc.at("dim").get<std::size_t>(), std::move(basic),
                         std::move(counts), std::move(compound));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorrupt, std::string("prototype file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kVersionMismatch || e.code() == ErrorCode::kCorrupt) throw;
    throw Error(ErrorCode::kCorrupt, std::string("prototype file: ") + e.what());
  }
}

void save_bank(const PrototypeBank& bank, const std::string& path) {
  write_file_atomic(path, serialize_bank(bank));
}

PrototypeBank load_bank(const std::string& path) { return deserialize_bank(read_text_file(path)); }

}  // namespace cerfuse
