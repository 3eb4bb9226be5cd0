#include "suites.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include "cli.hpp"
#include "hyperclass/ball_geometry.hpp"
#include "hyperclass/data_io.hpp"
#include "hyperclass/encoder.hpp"
#include "hyperclass/hierarchy.hpp"
#include "hyperclass/loss_head.hpp"
#include "hyperclass/manifold_optim.hpp"
#include "hyperclass/metrics.hpp"
#include "hyperclass/training.hpp"
#include "support.hpp"

namespace hyperclass::testing {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

// Running maximum of an error measure against its bound.
struct Bound {
  std::string name;
  double limit;
  double worst = 0.0;
  std::size_t count = 0;

  void add(double err) {
    ++count;
    if (!(err <= worst)) worst = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
  }
  [[nodiscard]] bool ok() const { return count > 0 && worst <= limit; }
  [[nodiscard]] std::string str() const {
    return name + "=" + fmt(worst) + (ok() ? "" : "(>" + fmt(limit) + ")") + " n=" + std::to_string(count);
  }
};

struct Failures {
  std::size_t n = 0;
  std::string first;
  void add(const std::string& what) {
    if (n++ == 0) first = what;
  }
};

SuiteResult summarize(const std::vector<Bound>& bounds, const Failures& failures, const std::string& extra = "") {
  SuiteResult r;
  r.pass = failures.n == 0;
  std::ostringstream os;
  for (const auto& b : bounds) {
    r.pass = r.pass && b.ok();
    os << b.str() << "; ";
  }
  if (failures.n > 0) os << failures.n << " property failures (first: " << failures.first << "); ";
  os << extra;
  r.detail = os.str();
  return r;
}

bool in_ball(const BallPoint& p) {
  for (double c : p.coords())
    if (!std::isfinite(c)) return false;
  return p.norm() <= 1.0 - GeometryConstants::kEpsBall + 1e-15;
}

}  // namespace

SuiteResult geometry_suite(std::uint64_t seed, std::size_t cases) {
  std::mt19937_64 rng(seed);
  const std::size_t dims[] = {2, 3, 5, 10, 50};
  Bound identity{"mobius_left_identity", 1e-12};
  Bound inverse{"mobius_left_inverse", 1e-9};
  Bound cancel{"mobius_left_cancellation", 1e-9};
  Bound mobius_ref{"mobius_vs_reference", 1e-9};
  Bound exp_log{"log(exp(v))", 1e-6};
  Bound log_exp{"exp(log(y))", 1e-6};
  Bound symmetry{"d_symmetry", 1e-10};
  Bound origin{"d(0,x)-2artanh|x|", 1e-9};
  Bound dist_ref{"d_vs_reference_rel", 1e-9};
  Failures fail;
  std::size_t clamped_skipped = 0;

  for (std::size_t i = 0; i < cases; ++i) {
    const std::size_t dim = dims[i % std::size(dims)];
    const BallPoint x = random_point(rng, dim, 0.9);
    const BallPoint y = random_point(rng, dim, 0.9);
    const BallPoint zero = BallPoint::origin(dim);

    const BallPoint xy = mobius_add(x, y);
    identity.add(max_abs_diff(mobius_add(zero, y).coords(), y.coords()));
    inverse.add(mobius_add(x, -x).norm());
    cancel.add(max_abs_diff(mobius_add(-x, xy).coords(), y.coords()));
    const auto ref = oracle_mobius(x.coords(), y.coords());
    double err = 0.0;
    for (std::size_t k = 0; k < dim; ++k) err = std::max(err, static_cast<double>(std::abs(ref[k] - xy[k])));
    mobius_ref.add(err);
    if (!in_ball(xy)) fail.add("mobius_add left the ball");

    const TangentVector lxy = log_map(x, y);
    const BallPoint back = exp_map(x, lxy.coords);
    log_exp.add(max_abs_diff(back.coords(), y.coords()));
    if (!in_ball(back)) fail.add("exp_map left the ball");

    // Triples with norms up to 0.95 for the metric axioms.
    const BallPoint a = random_point(rng, dim, 0.95);
    const BallPoint b = random_point(rng, dim, 0.95);
    const BallPoint c = random_point(rng, dim, 0.95);
    const double dab = distance(a, b);
    const double dba = distance(b, a);
    const double dbc = distance(b, c);
    const double dac = distance(a, c);
    if (!(dab > 0.0)) fail.add("d(a,b) <= 0 for distinct points");
    if (distance(a, a) != 0.0) fail.add("d(a,a) != 0");
    symmetry.add(std::abs(dab - dba));
    if (!(dac <= dab + dbc + 1e-9)) fail.add("triangle inequality violated");
    const double want = static_cast<double>(oracle_distance(a.coords(), b.coords()));
    dist_ref.add(std::abs(dab - want) / std::max(1.0, want));
    origin.add(std::abs(distance(zero, a) - 2.0 * std::atanh(a.norm())));
  }

  // Round trip from the tangent side: |x| <= 0.9, |v| <= 2, restricted to cases
  // where neither clamp is active (clamping is not invertible).
  for (std::size_t attempts = 0; exp_log.count < cases && attempts < 1000 * cases; ++attempts) {
    const std::size_t dim = dims[attempts % std::size(dims)];
    const BallPoint x = random_point(rng, dim, 0.9);
    const Vec v = random_vector(rng, dim, 2.0);
    const BallPoint y = exp_map(x, v);
    if (!in_ball(y)) fail.add("exp_map left the ball");
    // log_map caps its artanh argument at 1 - EPS_BALL, so steps longer than
    // that cannot be recovered either.
    const bool capped = std::tanh(conformal_factor(x) * norm(v) / 2.0) > 1.0 - GeometryConstants::kEpsBall;
    if (capped || y.norm() >= 1.0 - GeometryConstants::kEpsBall - 1e-12) {
      ++clamped_skipped;
      continue;
    }
    exp_log.add(max_abs_diff(log_map(x, y).coords, v));
  }

  // Boundary growth along a ray.
  double prev = -1.0;
  for (int k = 1; k <= 99; ++k) {
    const double r = k / 100.0;
    Vec p(3, 0.0);
    p[0] = r;
    const double d = distance(BallPoint::origin(3), BallPoint(p));
    if (!(d > prev)) fail.add("d(0, r e1) not increasing at r=" + fmt(r));
    origin.add(std::abs(d - 2.0 * std::atanh(r)));
    prev = d;
  }

  return summarize({identity, inverse, cancel, mobius_ref, exp_log, log_exp, symmetry, origin, dist_ref},
                   fail, "clamped exp images skipped=" + std::to_string(clamped_skipped));
}

namespace {

Vec dense_rows(const EncoderGrad& g, std::size_t vocab, std::size_t d_tok) {
  Vec out(vocab * d_tok, 0.0);
  for (const auto& [id, row] : g.rows)
    for (std::size_t k = 0; k < d_tok; ++k) out[id * d_tok + k] = row[k];
  return out;
}

}  // namespace

SuiteResult gradient_suite(std::uint64_t seed, std::size_t cases) {
  std::mt19937_64 rng(seed);
  Bound dist{"distance_grad", 1e-4};
  Bound label{"label_loss", 1e-4};
  Bound enc{"encoder", 1e-4};
  Bound logit{"logits+ce", 1e-4};
  Bound hyper{"hyper_weight", 1e-4};
  Bound e2e{"weighted_ce_batch_end_to_end", 1e-3};
  Failures fail;

  // distance_grad, 1000-ish pairs with norms up to 0.95.
  for (std::size_t i = 0; i < cases; ++i) {
    const std::size_t dim = 2 + i % 6;
    const BallPoint x = random_point(rng, dim, 0.95);
    const BallPoint y = random_point(rng, dim, 0.95);
    if (max_abs_diff(x.coords(), y.coords()) < 1e-3) continue;
    const auto [gx, gy] = distance_grad(x, y);
    Vec xv = x.coords(), yv = y.coords();
    const Vec nx = numeric_gradient([&] { return distance(BallPoint(xv), y); }, xv);
    const Vec ny = numeric_gradient([&] { return distance(x, BallPoint(yv)); }, yv);
    dist.add(gradient_rel_error(gx, nx));
    dist.add(gradient_rel_error(gy, ny));
    const auto swapped = distance_grad(y, x);
    if (max_abs_diff(swapped.first, gy) > 1e-12) fail.add("distance_grad not symmetric under swap");
  }

  const std::size_t small = std::max<std::size_t>(cases / 20, 10);

  // label_loss over every involved node.
  for (std::size_t i = 0; i < small; ++i) {
    const std::size_t dim = 3 + i % 4;
    LabelEmbeddingSet emb;
    emb.dim = dim;
    for (std::size_t n = 0; n < 7; ++n) {
      emb.names.push_back("n" + std::to_string(n));
      emb.points.push_back(random_point(rng, dim, 0.9));
    }
    const std::vector<NodeId> negs{2, 3, 3, 6};  // repeated negative on purpose
    const LabelLoss ll = label_loss(emb, 0, 1, negs);
    for (const auto& [node, g] : ll.grads) {
      Vec coords = emb.points[node].coords();
      const BallPoint saved = emb.points[node];
      const Vec num = numeric_gradient(
          [&] {
            emb.points[node] = BallPoint(coords);
            return label_loss(emb, 0, 1, negs).value;
          },
          coords);
      emb.points[node] = saved;
      label.add(gradient_rel_error(g, num));
    }
  }

  // Encoder backward.
  for (std::size_t i = 0; i < small; ++i) {
    EncoderModel model(9, 4, 3);
    model.init_uniform(rng, 0.5);
    const std::vector<TokenId> tokens{2, 5, 5, 7, 1};
    const Vec up = random_vector(rng, 3, 2.0);
    const auto f = [&] { return dot(up, encode(model, tokens)); };
    const EncoderGrad g = encode_backward(model, tokens, up);
    enc.add(gradient_rel_error(dense_rows(g, 9, 4), numeric_gradient(f, model.embedding.data)));
    enc.add(gradient_rel_error(g.w1.data, numeric_gradient(f, model.w1.data)));
    enc.add(gradient_rel_error(g.b1, numeric_gradient(f, model.b1)));
  }

  // Logit layer through the cross entropy, and the hyperbolic weight.
  for (std::size_t i = 0; i < small; ++i) {
    ClassifierHead head(5, 4, 3);
    head.init_uniform(rng, 0.5);
    Vec h = random_vector(rng, 5, 2.0);
    const std::size_t y = i % 4;
    const SampleForward fwd = forward_sample(head, h, y, nullptr);
    const SampleBackward bwd = backward_sample(head, y, fwd, nullptr, 1.0, 0.0);
    HeadGrad acc(head);
    accumulate(acc, h, bwd);
    const auto ce = [&] { return cross_entropy(logits(head, h), y); };
    logit.add(gradient_rel_error(acc.wc.data, numeric_gradient(ce, head.wc.data)));
    logit.add(gradient_rel_error(acc.bc, numeric_gradient(ce, head.bc)));
    logit.add(gradient_rel_error(bwd.dh, numeric_gradient(ce, h)));

    const BallPoint e = random_point(rng, 3, 0.9);
    const auto w = [&] { return hyper_weight(head, h, e); };
    hyper.add(gradient_rel_error(hyper_weight_grad(head, h, e), numeric_gradient(w, h)));
  }

  // End to end: encoder + head under the weighted batch loss.
  for (std::size_t i = 0; i < small; ++i) {
    const std::size_t vocab = 12, d_tok = 4, d_e = 5, m = 3, hd = 3;
    EncoderModel model(vocab, d_tok, d_e);
    model.init_uniform(rng, 0.5);
    ClassifierHead head(d_e, m, hd);
    head.init_uniform(rng, 0.5);
    std::vector<BallPoint> class_emb;
    for (std::size_t c = 0; c < m; ++c) class_emb.push_back(random_point(rng, hd, 0.9));
    const std::vector<std::vector<TokenId>> docs{{2, 3, 4}, {5, 5, 6}, {7}, {8, 9, 10, 11, 2}};
    const std::vector<std::size_t> ys{0, 1, 2, 1};

    for (int variant = 0; variant < 3; ++variant) {
      LossOptions opt;
      opt.kind = variant == 2 ? LossKind::CE : LossKind::WeightedCE;
      opt.weight_norm = variant == 1 ? WeightNorm::BatchMean : WeightNorm::None;
      const auto total = [&] {
        std::vector<Vec> hs;
        for (const auto& d : docs) hs.push_back(encode(model, d));
        return weighted_ce_batch(head, hs, ys, class_emb, opt).report.total;
      };
      std::vector<Vec> hs;
      for (const auto& d : docs) hs.push_back(encode(model, d));
      const BatchLoss bl = weighted_ce_batch(head, hs, ys, class_emb, opt);
      Vec d_emb(vocab * d_tok, 0.0), d_w1(d_e * d_tok, 0.0), d_b1(d_e, 0.0);
      for (std::size_t s = 0; s < docs.size(); ++s) {
        const EncoderGrad g = encode_backward(model, docs[s], bl.dh[s]);
        const Vec rows = dense_rows(g, vocab, d_tok);
        for (std::size_t k = 0; k < rows.size(); ++k) d_emb[k] += rows[k];
        for (std::size_t k = 0; k < d_w1.size(); ++k) d_w1[k] += g.w1.data[k];
        for (std::size_t k = 0; k < d_b1.size(); ++k) d_b1[k] += g.b1[k];
      }
      e2e.add(gradient_rel_error(d_emb, numeric_gradient(total, model.embedding.data)));
      e2e.add(gradient_rel_error(d_w1, numeric_gradient(total, model.w1.data)));
      e2e.add(gradient_rel_error(d_b1, numeric_gradient(total, model.b1)));
      e2e.add(gradient_rel_error(bl.head.wc.data, numeric_gradient(total, head.wc.data)));
      e2e.add(gradient_rel_error(bl.head.bc, numeric_gradient(total, head.bc)));
      if (opt.kind == LossKind::WeightedCE) {
        e2e.add(gradient_rel_error(bl.head.wp.data, numeric_gradient(total, head.wp.data)));
        e2e.add(gradient_rel_error(bl.head.bp, numeric_gradient(total, head.bp)));
      }
    }
  }

  return summarize({dist, label, enc, logit, hyper, e2e}, fail);
}

namespace {

LabelTree balanced_tree(std::uint64_t seed) {
  std::vector<NamedEdge> edges;
  for (int i = 0; i < 3; ++i) {
    const std::string mid = "n" + std::to_string(i);
    edges.push_back({"root", mid});
    for (int j = 0; j < 3; ++j) edges.push_back({mid, mid + "_" + std::to_string(j)});
  }
  return build_tree(edges, std::nullopt, HierarchyMode::Expert, seed);
}

double mean_norm(const LabelEmbeddingSet& emb, const std::vector<NodeId>& ids) {
  double s = 0.0;
  for (NodeId id : ids) s += emb.points[id].norm();
  return s / static_cast<double>(ids.size());
}

}  // namespace

SuiteResult embedding_quality_suite(std::size_t seeds) {
  double map = 0.0, leaf = 0.0, top = 0.0;
  Failures fail;
  for (std::size_t s = 1; s <= seeds; ++s) {
    const LabelTree tree = balanced_tree(s);
    LabelTrainConfig cfg;
    cfg.dim = 10;
    cfg.epochs = 300;
    cfg.seed = s;
    const LabelEmbeddingSet emb = train_label_embeddings(tree, cfg);
    for (const auto& p : emb.points)
      if (!in_ball(p)) fail.add("trained embedding left the ball");
    map += reconstruction_map(emb, tree);
    leaf += mean_norm(emb, tree.leaves());
    top += mean_norm(emb, tree.roots());
  }
  const double n = static_cast<double>(seeds);
  map /= n;
  leaf /= n;
  top /= n;
  SuiteResult r;
  r.pass = fail.n == 0 && map >= 0.9 && leaf > top;
  std::ostringstream os;
  os << std::setprecision(8) << "mean MAP=" << map << " (>=0.9); mean leaf norm=" << leaf
     << " > mean top-level norm=" << top;
  if (fail.n) os << "; " << fail.first;
  r.detail = os.str();
  return r;
}

SuiteResult metrics_oracle_suite(std::uint64_t seed, std::size_t sets) {
  std::mt19937_64 rng(seed);
  Bound diff{"max_abs_diff", 1e-12};
  Failures fail;

  const auto brute = [](const std::vector<std::size_t>& p, const std::vector<std::size_t>& g,
                        std::size_t m) {
    // Per class counts by direct scanning, no confusion matrix.
    std::vector<double> out;
    double correct = 0.0, wf1 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) correct += p[i] == g[i];
    for (std::size_t c = 0; c < m; ++c) {
      double tp = 0, fp = 0, fn = 0, nc = 0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] == c) ++nc;
        if (p[i] == c && g[i] == c) ++tp;
        if (p[i] == c && g[i] != c) ++fp;
        if (p[i] != c && g[i] == c) ++fn;
      }
      const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
      const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
      const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
      wf1 += nc / static_cast<double>(g.size()) * f1;
      out.insert(out.end(), {nc, prec, rec, f1});
    }
    out.push_back(correct / static_cast<double>(g.size()));
    out.push_back(wf1);
    return out;
  };
  const auto flatten = [](const EvalResult& r) {
    std::vector<double> out;
    for (const auto& c : r.per_class)
      out.insert(out.end(), {static_cast<double>(c.support), c.precision, c.recall, c.f1});
    out.push_back(r.accuracy);
    out.push_back(r.weighted_f1);
    return out;
  };

  for (std::size_t t = 0; t < sets; ++t) {
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 10)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 1000)(rng);
    std::uniform_int_distribution<std::size_t> cls(0, m - 1);
    std::vector<std::size_t> p(n), g(n);
    // Bias predictions toward the gold label so F1 values are not all near chance.
    std::bernoulli_distribution copy(0.5);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = cls(rng);
      p[i] = copy(rng) ? g[i] : cls(rng);
    }
    const EvalResult r = evaluate(p, g, m);
    diff.add(max_abs_diff(flatten(r), brute(p, g, m)));
    for (std::size_t c = 0; c < m; ++c) {
      std::uint64_t row = 0;
      for (auto v : r.confusion[c]) row += v;
      if (row != r.per_class[c].support) fail.add("confusion row sum != support");
    }
  }

  const std::vector<std::size_t> golds{0, 0, 0, 1}, preds{0, 0, 1, 1};
  const EvalResult worked = evaluate(preds, golds, 2);
  Bound example{"worked_example(wF1=23/30)", 1e-12};
  example.add(std::abs(worked.weighted_f1 - 23.0 / 30.0));
  example.add(std::abs(worked.accuracy - 0.75));
  return summarize({diff, example}, fail, "wF1=" + fmt(worked.weighted_f1));
}

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

SuiteResult determinism_suite(const std::filesystem::path& data_dir) {
  TempDir tmp("determinism");
  const std::string tree = (data_dir / "synthetic_tree.tsv").string();
  const std::string cmap = (data_dir / "synthetic_class_map.tsv").string();
  Failures fail;
  const auto must = [&](const CliRun& r, const std::string& what) {
    if (r.code != 0) fail.add(what + " exited " + std::to_string(r.code) + ": " + r.err);
  };

  must(cli({"synth-data", "--hierarchy", tree, "--class-map", cmap, "--out-dir", tmp / "syn", "--seed", "7"}),
       "synth-data");
  std::string label_ckpt[2], clf_ckpt[2], label_tsv[2], clf_log[2];
  for (int run = 0; run < 2; ++run) {
    const std::string tag = std::to_string(run);
    must(cli({"train-labels", "--hierarchy", tree, "--class-map", cmap, "--seed", "7", "--threads", "1",
              "--out", tmp / ("labels" + tag)}),
         "train-labels");
    const CliRun c = cli({"train-classifier", "--train", tmp / "syn/train.tsv", "--dev", tmp / "syn/dev.tsv",
                          "--labels-ckpt", tmp / "labels0", "--seed", "7", "--threads", "1", "--out",
                          tmp / ("clf" + tag)});
    must(c, "train-classifier");
    label_ckpt[run] = read_binary_file(tmp / ("labels" + tag));
    label_tsv[run] = read_binary_file(tmp / ("labels" + tag + ".tsv"));
    clf_ckpt[run] = read_binary_file(tmp / ("clf" + tag));
    clf_log[run] = c.out;
  }
  if (fail.n == 0) {
    if (label_ckpt[0] != label_ckpt[1]) fail.add("labels checkpoints differ");
    if (label_tsv[0] != label_tsv[1]) fail.add("embedding TSVs differ");
    if (clf_ckpt[0] != clf_ckpt[1]) fail.add("classifier checkpoints differ");
    if (clf_log[0] != clf_log[1]) fail.add("printed metrics differ");
  }
  SuiteResult r;
  r.pass = fail.n == 0;
  r.detail = r.pass ? "labels ckpt " + std::to_string(label_ckpt[0].size()) + " B, classifier ckpt " +
                          std::to_string(clf_ckpt[0].size()) + " B identical across runs"
                    : fail.first;
  return r;
}

SuiteResult persistence_suite(const std::filesystem::path& data_dir) {
  TempDir tmp("persistence");
  const LabelTree tree = load_tree(data_dir / "synthetic_tree.tsv", data_dir / "synthetic_class_map.tsv",
                                   HierarchyMode::Expert, 3);
  SynthSpec spec;
  spec.tree = tree;
  spec.seed = 3;
  const SyntheticSplits splits = generate_synthetic(spec);
  LabelTrainConfig lcfg;
  lcfg.seed = 3;
  const LabelEmbeddingSet emb = train_label_embeddings(tree, lcfg);
  ClassifierTrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 3;
  const TrainedClassifier trained =
      train_classifier(splits.train, splits.dev, class_embeddings(tree, emb), cfg);

  Checkpoint ckpt;
  ckpt.stage = Stage::Classifier;
  ckpt.seed = 3;
  ckpt.config = to_json(cfg);
  ckpt.class_labels = tree.class_labels;
  ckpt.tree = tree;
  ckpt.label_embeddings = emb;
  ckpt.vocab = trained.model.vocab;
  ckpt.encoder = trained.model.encoder;
  ckpt.head = trained.model.head;
  const auto path = tmp.path() / "model.ckpt";
  save_checkpoint(ckpt, path);
  const Checkpoint loaded = load_checkpoint(path);
  const ClassifierModel restored{*loaded.vocab, *loaded.encoder, *loaded.head, loaded.class_labels};

  // Probe: the first 100 test texts.
  Failures fail;
  std::size_t probes = 0;
  for (const auto& s : splits.test.samples) {
    if (probes++ == 100) break;
    const Vec a = logits(trained.model.head, trained.model.represent(s.text));
    const Vec b = logits(restored.head, restored.represent(s.text));
    if (a.size() != b.size() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) != 0)
      fail.add("logits differ for '" + s.text + "'");
    if (trained.model.predict(s.text) != restored.predict(s.text)) fail.add("prediction differs");
  }
  {
    const std::string a = serialize_checkpoint(loaded), b = serialize_checkpoint(ckpt);
    if (a != b) {
      std::size_t i = 0;
      while (i < std::min(a.size(), b.size()) && a[i] == b[i]) ++i;
      fail.add("re-serialised bytes differ at offset " + std::to_string(i) + ": " + b.substr(i > 40 ? i - 40 : 0, 80));
    }
  }

  SuiteResult r;
  r.pass = fail.n == 0 && probes >= 100;
  r.detail = r.pass ? "100 probe samples: logits and predictions bitwise identical after reload"
                    : (fail.n ? fail.first : "fewer than 100 probe samples");
  return r;
}

SyntheticComparison synthetic_comparison(const std::filesystem::path& data_dir, std::size_t seeds,
                                         bool with_ablation) {
  const auto taxonomy = data_dir / "synthetic_tree.tsv";
  const auto class_map = data_dir / "synthetic_class_map.tsv";
  SyntheticComparison out;
  for (std::size_t s = 1; s <= seeds; ++s) {
    const LabelTree expert = load_tree(taxonomy, class_map, HierarchyMode::Expert, s);
    SynthSpec spec;
    spec.tree = expert;
    spec.seed = s;
    const SyntheticSplits splits = generate_synthetic(spec);

    ClassifierTrainConfig cfg;
    cfg.seed = s;
    LabelTrainConfig lcfg;
    lcfg.seed = s;
    const auto test_wf1 = [&](std::span<const BallPoint> class_emb, LossKind kind) {
      ClassifierTrainConfig c = cfg;
      c.loss.kind = kind;
      const TrainedClassifier t = train_classifier(splits.train, splits.dev, class_emb, c);
      return evaluate_model(t.model, splits.test).weighted_f1;
    };
    const auto trained_labels = [&](HierarchyMode mode) {
      const LabelTree tree = load_tree(taxonomy, class_map, mode, s);
      return class_embeddings(tree, train_label_embeddings(tree, lcfg));
    };

    out.wce_expert += test_wf1(trained_labels(HierarchyMode::Expert), LossKind::WeightedCE);
    out.ce += test_wf1({}, LossKind::CE);
    if (with_ablation) {
      const LabelTree none = load_tree(taxonomy, class_map, HierarchyMode::None, s);
      out.wce_none += test_wf1(class_embeddings(none, uniform_label_layout(none, lcfg.dim, s)),
                               LossKind::WeightedCE);
      out.wce_none_init += test_wf1(trained_labels(HierarchyMode::None), LossKind::WeightedCE);
      out.wce_random += test_wf1(trained_labels(HierarchyMode::Random), LossKind::WeightedCE);
    }
  }
  const double n = static_cast<double>(seeds);
  out.wce_expert /= n;
  out.ce /= n;
  out.wce_none /= n;
  out.wce_none_init /= n;
  out.wce_random /= n;
  return out;
}

}  // namespace hyperclass::testing
