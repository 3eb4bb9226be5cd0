#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hyperclass/ball_geometry.hpp"
#include "hyperclass/hierarchy.hpp"
#include "hyperclass/matrix.hpp"

namespace hyperclass {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string name, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)) {}
  [[nodiscard]] const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

enum class LossKind { WeightedCE, CE };
enum class WeightNorm { None, BatchMean };

LossKind parse_loss_kind(std::string_view s);
WeightNorm parse_weight_norm(std::string_view s);
std::string_view to_string(LossKind k);
std::string_view to_string(WeightNorm w);

// Logit layer c = Wc h + bc and the Euclidean-to-ball bridge z = Wp h + bp,
// whose image exp_0(z) is compared against the label embedding.
struct ClassifierHead {
  Matrix wc;  // m x d_e
  Vec bc;     // m
  Matrix wp;  // h_d x d_e
  Vec bp;     // h_d

  ClassifierHead() = default;
  ClassifierHead(std::size_t d_e, std::size_t num_classes, std::size_t hyp_dim);

  [[nodiscard]] std::size_t num_classes() const noexcept { return wc.rows; }
  [[nodiscard]] std::size_t d_e() const noexcept { return wc.cols; }
  [[nodiscard]] std::size_t hyp_dim() const noexcept { return wp.rows; }

  void init_uniform(std::mt19937_64& rng, double bound = 0.05);

  friend bool operator==(const ClassifierHead&, const ClassifierHead&) = default;
};

Vec logits(const ClassifierHead& head, std::span<const double> h);

/// -log softmax(c)[y] via log-sum-exp.
double cross_entropy(std::span<const double> c, std::size_t y);

/// argmax with ties going to the lowest index.
std::size_t predict(std::span<const double> c);
std::size_t predict(const ClassifierHead& head, std::span<const double> h);

/// exp_0(Wp h + bp), clamped into the ball.
BallPoint project(const ClassifierHead& head, std::span<const double> h);

/// w = d(exp_0(Wp h + bp), e_y).
double hyper_weight(const ClassifierHead& head, std::span<const double> h, const BallPoint& e_y);

/// J^T g for the map z -> exp_0(z) including the radial clamp.
Vec exp0_vjp(std::span<const double> z, std::span<const double> g);

/// dw/dh.
Vec hyper_weight_grad(const ClassifierHead& head, std::span<const double> h, const BallPoint& e_y);

/// Label embedding of every class, in class-index order. Throws ConfigError
/// when a class node has no embedding.
std::vector<BallPoint> class_embeddings(const LabelTree& tree, const LabelEmbeddingSet& emb);

struct SampleTerms {
  double ce = 0.0;
  double w = 1.0;
};

struct LossReport {
  double total = 0.0;
  std::vector<SampleTerms> per_sample;
  [[nodiscard]] std::size_t batch_size() const noexcept { return per_sample.size(); }
};

struct HeadGrad {
  Matrix wc;
  Vec bc;
  Matrix wp;
  Vec bp;

  HeadGrad() = default;
  explicit HeadGrad(const ClassifierHead& like);
};

struct LossOptions {
  LossKind kind = LossKind::WeightedCE;
  WeightNorm weight_norm = WeightNorm::None;
};

// Per-sample pieces. Samples are independent except for the batch-level
// coefficients, which makes it possible to run the forward and backward
// halves in parallel and reduce in a fixed order.
struct SampleForward {
  Vec logits;
  double ce = 0.0;
  double w = 1.0;
  Vec z;  // pre-projection tangent vector at the origin (empty for plain CE)
};

struct SampleBackward {
  Vec dlogits;
  Vec dz;  // empty when the weight path carries no gradient
  Vec dh;
};

SampleForward forward_sample(const ClassifierHead& head, std::span<const double> h, std::size_t y,
                             const BallPoint* e_y);

struct BatchCoefficients {
  double total = 0.0;
  Vec dce;  // d total / d ce_i
  Vec dw;   // d total / d w_i
};

/// Batch reduction: total = (1/N) sum_i w~_i ce_i where w~ = w (no norm) or
/// w / mean(w) (batch-mean).
BatchCoefficients batch_coefficients(std::span<const SampleForward> fwd, const LossOptions& opt);

SampleBackward backward_sample(const ClassifierHead& head, std::size_t y,
                               const SampleForward& fwd, const BallPoint* e_y, double dce,
                               double dw);

void accumulate(HeadGrad& acc, std::span<const double> h, const SampleBackward& b);

struct BatchLoss {
  LossReport report;
  HeadGrad head;
  std::vector<Vec> dh;  // d total / d h_i
};

/// Label-aware weighted cross entropy over a batch. `class_emb` is indexed by
/// class and may be empty for LossKind::CE. Label embeddings receive no gradient.
BatchLoss weighted_ce_batch(const ClassifierHead& head, std::span<const Vec> hs,
                            std::span<const std::size_t> ys, std::span<const BallPoint> class_emb,
                            const LossOptions& opt = {});

}  // namespace hyperclass
