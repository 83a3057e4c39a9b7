#include "cerfuse/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace cerfuse {

ConfusionMatrix::ConfusionMatrix(SpaceRef space)
    : space_(std::move(space)), counts_(space_->size() * space_->size(), 0) {}

void ConfusionMatrix::add(std::size_t gold, std::size_t predicted, std::size_t n) {
  if (gold >= size() || predicted >= size()) {
    throw Error(ErrorCode::kUnknownLabel, "confusion index out of range");
  }
  counts_[gold * size() + predicted] += n;
  total_ += n;
}

ConfusionMatrix confusion(std::span<const std::string> golds, std::span<const std::string> preds,
                          const SpaceRef& space) {
  if (golds.size() != preds.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(golds.size()) + " gold labels vs " +
                    std::to_string(preds.size()) + " predictions");
  }
  if (golds.empty()) throw Error(ErrorCode::kLengthMismatch, "no labels to score");
  ConfusionMatrix cm(space);
  for (std::size_t i = 0; i < golds.size(); ++i) {
    cm.add(space->index_of(golds[i]), space->index_of(preds[i]));
  }
  return cm;
}

EvalReport evaluate(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::kEmptyMatrix, "nothing was scored");
  const std::size_t C = cm.size();
  EvalReport report{{}, 0.0, 0.0, 0.0, cm.total(), cm};
  double f1_sum = 0.0, recall_sum = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t tp = cm.at(c, c), gold = 0, predicted = 0;
    for (std::size_t k = 0; k < C; ++k) {
      gold += cm.at(c, k);
      predicted += cm.at(k, c);
    }
    double recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    double precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    report.per_class.push_back({100.0 * precision, 100.0 * recall, 100.0 * f1, gold});
    f1_sum += f1;
    recall_sum += recall;
  }
  report.macro_f1 = 100.0 * f1_sum / static_cast<double>(C);
  report.uar = 100.0 * recall_sum / static_cast<double>(C);
  report.average = (report.macro_f1 + report.uar) / 2.0;
  return report;
}

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string report_table(const EvalReport& report) {
  const auto& space = *report.matrix.space();
  std::size_t width = 8;
  for (const auto& l : space.labels()) width = std::max(width, l.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  std::string out;
  out += pad("class", width) + pad("precision", 11) + pad("recall", 9) + pad("F1", 9) +
         pad("support", 9) + "\n";
  for (std::size_t c = 0; c < space.size(); ++c) {
    const auto& s = report.per_class[c];
    out += pad(space.label(c), width) + pad(fixed2(s.precision), 11) + pad(fixed2(s.recall), 9) +
           pad(fixed2(s.f1), 9) + pad(std::to_string(s.support), 9) + "\n";
  }
  out += "\n";
  out += "samples   " + std::to_string(report.samples) + "\n";
  out += "macro-F1  " + fixed2(report.macro_f1) + "\n";
  out += "UAR       " + fixed2(report.uar) + "\n";
  out += "Average   " + fixed2(report.average) + "\n";
  return out;
}

std::string report_json(const EvalReport& report) {
  const auto& space = *report.matrix.space();
  nlohmann::ordered_json doc;
  doc["samples"] = report.samples;
  doc["macro_f1"] = report.macro_f1;
  doc["uar"] = report.uar;
  doc["average"] = report.average;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < space.size(); ++c) {
    const auto& s = report.per_class[c];
    classes.push_back({{"label", space.label(c)},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"support", s.support}});
  }
  doc["per_class"] = classes;
  doc["labels"] = space.labels();
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < space.size(); ++g) {
    std::vector<std::size_t> row;
    for (std::size_t p = 0; p < space.size(); ++p) row.push_back(report.matrix.at(g, p));
    rows.push_back(row);
  }
  doc["confusion"] = rows;
  return doc.dump(2) + "\n";
}

}  // namespace cerfuse
