#include "hyperclass/metrics.hpp"

namespace hyperclass {

EvalResult evaluate(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                    std::size_t num_classes) {
  if (preds.size() != golds.size()) {
    throw MetricsError("prediction/gold length mismatch: " + std::to_string(preds.size()) +
                       " vs " + std::to_string(golds.size()));
  }
  if (golds.empty()) throw MetricsError("cannot evaluate an empty set");
  EvalResult r;
  r.confusion.assign(num_classes, std::vector<std::uint64_t>(num_classes, 0));
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (golds[i] >= num_classes || preds[i] >= num_classes) {
      throw MetricsError("class index out of range at position " + std::to_string(i));
    }
    ++r.confusion[golds[i]][preds[i]];
  }

  const double n = static_cast<double>(golds.size());
  std::uint64_t correct = 0;
  r.per_class.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const std::uint64_t tp = r.confusion[c][c];
    std::uint64_t gold_total = 0;
    std::uint64_t pred_total = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      gold_total += r.confusion[c][k];
      pred_total += r.confusion[k][c];
    }
    correct += tp;
    ClassStats& s = r.per_class[c];
    s.support = gold_total;
    s.precision = pred_total ? static_cast<double>(tp) / static_cast<double>(pred_total) : 0.0;
    s.recall = gold_total ? static_cast<double>(tp) / static_cast<double>(gold_total) : 0.0;
    const double pr = s.precision + s.recall;
    s.f1 = pr > 0.0 ? 2.0 * s.precision * s.recall / pr : 0.0;
    r.weighted_f1 += static_cast<double>(gold_total) / n * s.f1;
  }
  r.accuracy = static_cast<double>(correct) / n;
  return r;
}

nlohmann::json to_json(const EvalResult& r, std::span<const std::string> names) {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& s = r.per_class[c];
    nlohmann::json entry{{"class", c},
                         {"support", s.support},
                         {"precision", s.precision},
                         {"recall", s.recall},
                         {"f1", s.f1}};
    if (c < names.size()) entry["label"] = names[c];
    per_class.push_back(std::move(entry));
  }
  return {{"accuracy", r.accuracy},
          {"weighted_f1", r.weighted_f1},
          {"per_class", std::move(per_class)},
          {"confusion", r.confusion}};
}

}  // namespace hyperclass
