#include "hyperclass/loss_head.hpp"

#include <algorithm>
#include <cmath>

namespace hyperclass {

LossKind parse_loss_kind(std::string_view s) {
  if (s == "wce") return LossKind::WeightedCE;
  if (s == "ce") return LossKind::CE;
  throw std::invalid_argument("unknown loss: " + std::string(s));
}

WeightNorm parse_weight_norm(std::string_view s) {
  if (s == "none") return WeightNorm::None;
  if (s == "batch-mean") return WeightNorm::BatchMean;
  throw std::invalid_argument("unknown weight norm: " + std::string(s));
}

std::string_view to_string(LossKind k) { return k == LossKind::CE ? "ce" : "wce"; }
std::string_view to_string(WeightNorm w) { return w == WeightNorm::None ? "none" : "batch-mean"; }

ClassifierHead::ClassifierHead(std::size_t d_e, std::size_t num_classes, std::size_t hyp_dim)
    : wc(num_classes, d_e), bc(num_classes, 0.0), wp(hyp_dim, d_e), bp(hyp_dim, 0.0) {}

void ClassifierHead::init_uniform(std::mt19937_64& rng, double bound) {
  fill_uniform(wc.data, bound, rng);
  fill_uniform(bc, bound, rng);
  fill_uniform(wp.data, bound, rng);
  fill_uniform(bp, bound, rng);
}

HeadGrad::HeadGrad(const ClassifierHead& like)
    : wc(like.wc.rows, like.wc.cols),
      bc(like.bc.size(), 0.0),
      wp(like.wp.rows, like.wp.cols),
      bp(like.bp.size(), 0.0) {}

Vec logits(const ClassifierHead& head, std::span<const double> h) {
  if (h.size() != head.d_e()) throw std::invalid_argument("representation size mismatch");
  return affine(head.wc, h, head.bc);
}

double cross_entropy(std::span<const double> c, std::size_t y) {
  if (y >= c.size()) throw std::out_of_range("class index out of range");
  const double mx = *std::max_element(c.begin(), c.end());
  double z = 0.0;
  for (double v : c) z += std::exp(v - mx);
  return mx + std::log(z) - c[y];
}

std::size_t predict(std::span<const double> c) {
  return static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
}

std::size_t predict(const ClassifierHead& head, std::span<const double> h) {
  return predict(logits(head, h));
}

BallPoint project(const ClassifierHead& head, std::span<const double> h) {
  if (h.size() != head.d_e()) throw std::invalid_argument("representation size mismatch");
  const Vec z = affine(head.wp, h, head.bp);
  return exp_map(BallPoint::origin(z.size()), z);
}

double hyper_weight(const ClassifierHead& head, std::span<const double> h, const BallPoint& e_y) {
  return distance(project(head, h), e_y);
}

Vec exp0_vjp(std::span<const double> z, std::span<const double> g) {
  const double r = norm(z);
  Vec out(g.begin(), g.end());
  if (r < GeometryConstants::kEpsDiv) return out;
  const double t = std::tanh(r);
  const double u_dot_g = dot(z, g) / r;
  const double max_radius = 1.0 - GeometryConstants::kEpsBall;
  // exp_0(z) = tanh(|z|) z/|z|; J = (t/r)(I - uu^T) + (1 - t^2) uu^T.
  // Past the clamp radius the radial part is constant.
  const double tangential = (t > max_radius ? max_radius : t) / r;
  const double radial = t > max_radius ? 0.0 : 1.0 - t * t;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ui = z[i] / r;
    out[i] = tangential * (g[i] - ui * u_dot_g) + radial * ui * u_dot_g;
  }
  return out;
}

Vec hyper_weight_grad(const ClassifierHead& head, std::span<const double> h, const BallPoint& e_y) {
  const Vec z = affine(head.wp, h, head.bp);
  const BallPoint p = exp_map(BallPoint::origin(z.size()), z);
  const Vec dz = exp0_vjp(z, distance_grad(p, e_y).first);
  return transpose_times(head.wp, dz);
}

std::vector<BallPoint> class_embeddings(const LabelTree& tree, const LabelEmbeddingSet& emb) {
  std::vector<BallPoint> out;
  out.reserve(tree.num_classes());
  for (std::size_t c = 0; c < tree.num_classes(); ++c) {
    const std::string& node = tree.nodes.at(tree.class_leaves[c]);
    auto it = std::find(emb.names.begin(), emb.names.end(), node);
    if (it == emb.names.end()) {
      throw ConfigError("MissingLabelEmbedding", "no label embedding for class '" +
                                                     tree.class_labels[c] + "' (node '" + node +
                                                     "')");
    }
    out.push_back(emb.points[static_cast<std::size_t>(it - emb.names.begin())]);
  }
  return out;
}

SampleForward forward_sample(const ClassifierHead& head, std::span<const double> h, std::size_t y,
                             const BallPoint* e_y) {
  SampleForward f;
  f.logits = logits(head, h);
  f.ce = cross_entropy(f.logits, y);
  if (e_y != nullptr) {
    f.z = affine(head.wp, h, head.bp);
    f.w = distance(exp_map(BallPoint::origin(f.z.size()), f.z), *e_y);
  }
  return f;
}

BatchCoefficients batch_coefficients(std::span<const SampleForward> fwd, const LossOptions& opt) {
  const std::size_t n = fwd.size();
  if (n == 0) throw std::invalid_argument("empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  BatchCoefficients out;
  out.dce.assign(n, 0.0);
  out.dw.assign(n, 0.0);

  if (opt.kind == LossKind::CE) {
    for (std::size_t i = 0; i < n; ++i) {
      out.total += fwd[i].ce;
      out.dce[i] = inv_n;
    }
    out.total *= inv_n;
    return out;
  }

  double sum_wce = 0.0;
  double sum_w = 0.0;
  for (const auto& f : fwd) {
    sum_wce += f.w * f.ce;
    sum_w += f.w;
  }
  const double mean_w = sum_w * inv_n;
  if (opt.weight_norm == WeightNorm::None) {
    out.total = sum_wce * inv_n;
    for (std::size_t i = 0; i < n; ++i) {
      out.dce[i] = fwd[i].w * inv_n;
      out.dw[i] = fwd[i].ce * inv_n;
    }
  } else if (mean_w < GeometryConstants::kEpsDiv) {
    // Degenerate batch: every weight is ~0, fall back to unit weights.
    for (std::size_t i = 0; i < n; ++i) {
      out.total += fwd[i].ce;
      out.dce[i] = inv_n;
    }
    out.total *= inv_n;
  } else {
    out.total = sum_wce * inv_n / mean_w;
    for (std::size_t i = 0; i < n; ++i) {
      out.dce[i] = fwd[i].w / mean_w * inv_n;
      out.dw[i] = inv_n * (fwd[i].ce / mean_w - sum_wce * inv_n / (mean_w * mean_w));
    }
  }
  return out;
}

SampleBackward backward_sample(const ClassifierHead& head, std::size_t y,
                               const SampleForward& fwd, const BallPoint* e_y, double dce,
                               double dw) {
  SampleBackward b;
  // d ce / d c = softmax(c) - onehot(y)
  const double mx = *std::max_element(fwd.logits.begin(), fwd.logits.end());
  double z = 0.0;
  for (double v : fwd.logits) z += std::exp(v - mx);
  b.dlogits.resize(fwd.logits.size());
  for (std::size_t k = 0; k < fwd.logits.size(); ++k) {
    b.dlogits[k] = dce * (std::exp(fwd.logits[k] - mx) / z - (k == y ? 1.0 : 0.0));
  }
  b.dh = transpose_times(head.wc, b.dlogits);

  if (e_y != nullptr && dw != 0.0 && !fwd.z.empty()) {
    const BallPoint p = exp_map(BallPoint::origin(fwd.z.size()), fwd.z);
    Vec g = distance_grad(p, *e_y).first;
    for (double& x : g) x *= dw;
    b.dz = exp0_vjp(fwd.z, g);
    const Vec dh_w = transpose_times(head.wp, b.dz);
    for (std::size_t i = 0; i < b.dh.size(); ++i) b.dh[i] += dh_w[i];
  }
  return b;
}

void accumulate(HeadGrad& acc, std::span<const double> h, const SampleBackward& b) {
  add_outer(acc.wc, b.dlogits, h);
  for (std::size_t k = 0; k < b.dlogits.size(); ++k) acc.bc[k] += b.dlogits[k];
  if (!b.dz.empty()) {
    add_outer(acc.wp, b.dz, h);
    for (std::size_t k = 0; k < b.dz.size(); ++k) acc.bp[k] += b.dz[k];
  }
}

BatchLoss weighted_ce_batch(const ClassifierHead& head, std::span<const Vec> hs,
                            std::span<const std::size_t> ys, std::span<const BallPoint> class_emb,
                            const LossOptions& opt) {
  if (hs.size() != ys.size()) throw std::invalid_argument("batch size mismatch");
  const bool weighted = opt.kind == LossKind::WeightedCE;
  if (weighted && class_emb.size() != head.num_classes()) {
    throw ConfigError("MissingLabelEmbedding",
                      "weighted loss needs one label embedding per class (" +
                          std::to_string(head.num_classes()) + " classes, " +
                          std::to_string(class_emb.size()) + " embeddings)");
  }
  const auto target = [&](std::size_t i) -> const BallPoint* {
    return weighted ? &class_emb[ys[i]] : nullptr;
  };

  std::vector<SampleForward> fwd;
  fwd.reserve(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) fwd.push_back(forward_sample(head, hs[i], ys[i], target(i)));
  const BatchCoefficients coef = batch_coefficients(fwd, opt);

  BatchLoss out;
  out.report.total = coef.total;
  out.head = HeadGrad(head);
  for (std::size_t i = 0; i < hs.size(); ++i) {
    out.report.per_sample.push_back({fwd[i].ce, fwd[i].w});
    SampleBackward b = backward_sample(head, ys[i], fwd[i], target(i), coef.dce[i], coef.dw[i]);
    accumulate(out.head, hs[i], b);
    out.dh.push_back(std::move(b.dh));
  }
  return out;
}

}  // namespace hyperclass
