#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace hyperclass {

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ClassStats {
  std::size_t support = 0;  // n_c, number of gold samples
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalResult {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::vector<ClassStats> per_class;
  std::vector<std::vector<std::uint64_t>> confusion;  // [gold][pred]
};

/// Accuracy, support-weighted F1 and the confusion matrix. Zero-denominator
/// precision or recall counts as 0.
EvalResult evaluate(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                    std::size_t num_classes);

/// `names`, if non-empty, labels the per-class entries.
nlohmann::json to_json(const EvalResult& r, std::span<const std::string> names = {});

}  // namespace hyperclass
