#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hyperclass/data_io.hpp"
#include "hyperclass/encoder.hpp"
#include "hyperclass/loss_head.hpp"
#include "hyperclass/metrics.hpp"

namespace hyperclass {

struct ClassifierTrainConfig {
  std::size_t d_tok = 64;
  std::size_t d_e = 128;
  std::size_t hyp_dim = 100;  // only used when no label embeddings are given
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t min_freq = 2;
  double init_bound = 0.05;
  LossOptions loss;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
};

nlohmann::json to_json(const ClassifierTrainConfig& c);

struct ClassifierModel {
  Vocabulary vocab;
  EncoderModel encoder;
  ClassifierHead head;
  std::vector<std::string> class_labels;

  [[nodiscard]] std::vector<double> represent(std::string_view text) const;
  [[nodiscard]] std::size_t predict(std::string_view text) const;
};

std::vector<std::size_t> predict_all(const ClassifierModel& model, const LabeledDataset& ds,
                                     std::size_t threads = 1);
EvalResult evaluate_model(const ClassifierModel& model, const LabeledDataset& ds,
                          std::size_t threads = 1);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_acc = 0.0;
  double dev_wf1 = 0.0;
};

struct TrainedClassifier {
  ClassifierModel model;  // parameters from the epoch with the best dev weighted F1
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

/// Trains encoder + head with AdamW. `class_emb` holds the frozen label
/// embedding of every class (required for the weighted loss, ignored for CE).
TrainedClassifier train_classifier(const LabeledDataset& train, const LabeledDataset& dev,
                                   std::span<const BallPoint> class_emb,
                                   const ClassifierTrainConfig& config,
                                   const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Runs fn(i) for i in [0, n) on up to `threads` worker threads.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace hyperclass
