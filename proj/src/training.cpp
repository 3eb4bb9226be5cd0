#include "hyperclass/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "hyperclass/rng.hpp"

namespace hyperclass {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

nlohmann::json to_json(const ClassifierTrainConfig& c) {
  return {{"d_tok", c.d_tok},
          {"d_e", c.d_e},
          {"hyp_dim", c.hyp_dim},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"min_freq", c.min_freq},
          {"init_bound", c.init_bound},
          {"loss", to_string(c.loss.kind)},
          {"weight_norm", to_string(c.loss.weight_norm)},
          {"seed", c.seed}};
}

std::vector<double> ClassifierModel::represent(std::string_view text) const {
  return encode(encoder, tokenize(vocab, text));
}

std::size_t ClassifierModel::predict(std::string_view text) const {
  return hyperclass::predict(head, represent(text));
}

std::vector<std::size_t> predict_all(const ClassifierModel& model, const LabeledDataset& ds,
                                     std::size_t threads) {
  std::vector<std::size_t> out(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) { out[i] = model.predict(ds.samples[i].text); });
  return out;
}

EvalResult evaluate_model(const ClassifierModel& model, const LabeledDataset& ds,
                          std::size_t threads) {
  if (ds.label_names != model.class_labels) {
    throw ConfigError("LabelMismatch", "dataset labels do not match the model's classes");
  }
  const auto preds = predict_all(model, ds, threads);
  return evaluate(preds, ds.labels(), model.class_labels.size());
}

namespace {

// Flat views over every trainable tensor, in a fixed order.
std::vector<std::span<double>> parameter_views(EncoderModel& enc, ClassifierHead& head) {
  return {enc.embedding.data, enc.w1.data, enc.b1, head.wc.data, head.bc, head.wp.data, head.bp};
}

class AdamW {
 public:
  AdamW(const std::vector<std::span<double>>& params, const ClassifierTrainConfig& c) : c_(c) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }

  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(c_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(c_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto p = params[k];
      auto g = grads[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = c_.beta1 * m[i] + (1.0 - c_.beta1) * g[i];
        v[i] = c_.beta2 * v[i] + (1.0 - c_.beta2) * g[i] * g[i];
        p[i] -= c_.lr * c_.weight_decay * p[i];
        p[i] -= c_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + c_.eps);
      }
    }
  }

 private:
  const ClassifierTrainConfig& c_;
  std::vector<Vec> m_;
  std::vector<Vec> v_;
  std::uint64_t t_ = 0;
};

}  // namespace

TrainedClassifier train_classifier(const LabeledDataset& train, const LabeledDataset& dev,
                                   std::span<const BallPoint> class_emb,
                                   const ClassifierTrainConfig& config,
                                   const std::function<void(const EpochRecord&)>& on_epoch) {
  if (config.batch_size == 0 || config.epochs == 0 || config.d_tok == 0 || config.d_e == 0) {
    throw std::invalid_argument("training config: sizes must be positive");
  }
  if (train.size() == 0) throw DatasetError(DatasetError::Kind::Empty, "training set is empty");
  if (dev.label_names != train.label_names) {
    throw ConfigError("LabelMismatch", "train and dev label lists differ");
  }
  const std::size_t m = train.label_names.size();
  const bool weighted = config.loss.kind == LossKind::WeightedCE;
  if (weighted && class_emb.size() != m) {
    throw ConfigError("MissingLabelEmbedding", "weighted loss needs one label embedding per class");
  }
  const std::size_t hyp_dim = weighted ? class_emb.front().dim() : config.hyp_dim;

  TrainedClassifier result;
  ClassifierModel& model = result.model;
  model.class_labels = train.label_names;
  const auto train_texts = train.texts();
  model.vocab = Vocabulary::build(train_texts, config.min_freq);

  auto init_rng = make_rng(config.seed, RngStream::EncoderInit);
  model.encoder = EncoderModel(model.vocab.size(), config.d_tok, config.d_e);
  model.encoder.init_uniform(init_rng, config.init_bound);
  model.head = ClassifierHead(config.d_e, m, hyp_dim);
  model.head.init_uniform(init_rng, config.init_bound);

  std::vector<std::vector<TokenId>> tokens(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) tokens[i] = tokenize(model.vocab, train_texts[i]);

  const auto params = parameter_views(model.encoder, model.head);
  AdamW opt(params, config);
  EncoderModel enc_grad(model.vocab.size(), config.d_tok, config.d_e);
  HeadGrad head_grad(model.head);

  auto order_rng = make_rng(config.seed, RngStream::BatchOrder);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  ClassifierModel best = model;
  double best_wf1 = -1.0;
  const std::size_t bs = config.batch_size;
  std::vector<Vec> hs(bs);
  std::vector<SampleForward> fwd(bs);
  std::vector<SampleBackward> bwd(bs);
  std::vector<EncoderGrad> egrads(bs);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(bs, order.size() - start);
      auto target = [&](std::size_t j) -> const BallPoint* {
        return weighted ? &class_emb[train.samples[order[start + j]].label] : nullptr;
      };
      parallel_for(n, config.threads, [&](std::size_t j) {
        const std::size_t idx = order[start + j];
        hs[j] = encode(model.encoder, tokens[idx]);
        fwd[j] = forward_sample(model.head, hs[j], train.samples[idx].label, target(j));
      });
      const BatchCoefficients coef =
          batch_coefficients(std::span<const SampleForward>(fwd.data(), n), config.loss);
      loss_sum += coef.total * static_cast<double>(n);
      parallel_for(n, config.threads, [&](std::size_t j) {
        const std::size_t idx = order[start + j];
        bwd[j] = backward_sample(model.head, train.samples[idx].label, fwd[j], target(j),
                                 coef.dce[j], coef.dw[j]);
        egrads[j] = encode_backward(model.encoder, tokens[idx], bwd[j].dh);
      });

      // Fixed-order reduction keeps results independent of the thread count.
      std::fill(enc_grad.embedding.data.begin(), enc_grad.embedding.data.end(), 0.0);
      std::fill(enc_grad.w1.data.begin(), enc_grad.w1.data.end(), 0.0);
      std::fill(enc_grad.b1.begin(), enc_grad.b1.end(), 0.0);
      head_grad = HeadGrad(model.head);
      for (std::size_t j = 0; j < n; ++j) {
        accumulate(head_grad, hs[j], bwd[j]);
        for (const auto& [tok, row] : egrads[j].rows) {
          auto dst = enc_grad.embedding.row(tok);
          for (std::size_t i = 0; i < row.size(); ++i) dst[i] += row[i];
        }
        for (std::size_t i = 0; i < enc_grad.w1.data.size(); ++i) enc_grad.w1.data[i] += egrads[j].w1.data[i];
        for (std::size_t i = 0; i < enc_grad.b1.size(); ++i) enc_grad.b1[i] += egrads[j].b1[i];
      }
      opt.step(params, {enc_grad.embedding.data, enc_grad.w1.data, enc_grad.b1, head_grad.wc.data,
                        head_grad.bc, head_grad.wp.data, head_grad.bp});
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    const EvalResult dev_eval = evaluate_model(model, dev, config.threads);
    rec.dev_acc = dev_eval.accuracy;
    rec.dev_wf1 = dev_eval.weighted_f1;
    result.history.push_back(rec);
    if (rec.dev_wf1 > best_wf1) {
      best_wf1 = rec.dev_wf1;
      best = model;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(rec);
  }
  result.model = std::move(best);
  return result;
}

}  // namespace hyperclass
