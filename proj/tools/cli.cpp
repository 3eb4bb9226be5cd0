#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "hyperclass/data_io.hpp"
#include "hyperclass/hierarchy.hpp"
#include "hyperclass/metrics.hpp"
#include "hyperclass/training.hpp"

namespace hyperclass {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("HYPERCLASS_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("HYPERCLASS_SEED is not an unsigned integer: ") + env);
    }
  }
  return 42;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string to_tsv(const LabelEmbeddingSet& emb) {
  std::ostringstream os;
  write_embeddings_tsv(os, emb);
  return os.str();
}

// ---------------------------------------------------------------------------

struct TrainLabelsArgs {
  std::string hierarchy;
  std::string class_map;
  std::string mode = "expert";
  std::size_t dim = 100;
  std::size_t epochs = 300;
  std::size_t negatives = 10;
  double lr = 0.01;
  std::size_t burn_in = 10;
  std::string none_layout = "init";
  std::size_t threads = 1;
  std::string out;
  std::string embeddings_out;
};

int cmd_train_labels(const TrainLabelsArgs& a, std::uint64_t seed, std::ostream& out) {
  const auto mode = parse_hierarchy_mode(a.mode);
  std::optional<fs::path> class_map;
  if (!a.class_map.empty()) class_map = a.class_map;
  const LabelTree tree = load_tree(a.hierarchy, class_map, mode, seed);

  LabelTrainConfig cfg;
  cfg.dim = a.dim;
  cfg.epochs = a.epochs;
  cfg.negatives = a.negatives;
  cfg.lr = a.lr;
  cfg.burn_in_epochs = a.burn_in;
  cfg.seed = seed;
  LabelTrainResult trained;
  if (mode == HierarchyMode::None && a.none_layout == "uniform") {
    trained.embeddings = uniform_label_layout(tree, a.dim, seed);
  } else {
    trained = train_label_embeddings_verbose(tree, cfg);
  }

  Checkpoint ckpt;
  ckpt.stage = Stage::Labels;
  ckpt.seed = seed;
  ckpt.config = {{"mode", a.mode},     {"dim", a.dim}, {"epochs", a.epochs},
                 {"negatives", a.negatives}, {"lr", a.lr},   {"burn_in", a.burn_in}, {"none_layout", a.none_layout}};
  ckpt.class_labels = tree.class_labels;
  ckpt.tree = tree;
  ckpt.label_embeddings = trained.embeddings;

  const fs::path emb_path = a.embeddings_out.empty() ? fs::path(a.out + ".tsv") : fs::path(a.embeddings_out);
  save_checkpoint(ckpt, a.out);
  atomic_write(emb_path, to_tsv(trained.embeddings));

  // Reconstruction is always scored against the taxonomy file as written.
  const double map = reconstruction_map(trained.embeddings, tree);
  double expert_map = map;
  if (mode != HierarchyMode::Expert) {
    try {
      expert_map = reconstruction_map(trained.embeddings,
                                      load_tree(a.hierarchy, class_map, HierarchyMode::Expert, seed));
    } catch (const TreeError&) {
      expert_map = std::numeric_limits<double>::quiet_NaN();
    }
  }

  nlohmann::json report{
      {"stage", "labels"},
      {"mode", a.mode},
      {"nodes", tree.size()},
      {"edges", tree.edges.size()},
      {"classes", tree.num_classes()},
      {"final_loss", trained.epoch_loss.empty() ? nlohmann::json(nullptr)
                                                : nlohmann::json(trained.epoch_loss.back())},
      {"map", number_or_null(map)},
      {"expert_map", number_or_null(expert_map)},
      {"checkpoint", a.out},
      {"embeddings", emb_path.string()}};
  out << report.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainClassifierArgs {
  std::string train;
  std::string dev;
  std::string labels_ckpt;
  std::string class_map;
  std::string loss = "wce";
  std::string weight_norm = "none";
  std::size_t epochs = 20;
  std::size_t batch = 16;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::size_t dim_token = 64;
  std::size_t dim_hidden = 128;
  std::size_t hyp_dim = 100;
  std::size_t min_freq = 2;
  std::size_t threads = 1;
  std::string out;
};

int cmd_train_classifier(const TrainClassifierArgs& a, std::uint64_t seed, std::ostream& out) {
  ClassifierTrainConfig cfg;
  cfg.loss.kind = parse_loss_kind(a.loss);
  cfg.loss.weight_norm = parse_weight_norm(a.weight_norm);
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.lr = a.lr;
  cfg.weight_decay = a.weight_decay;
  cfg.d_tok = a.dim_token;
  cfg.d_e = a.dim_hidden;
  cfg.hyp_dim = a.hyp_dim;
  cfg.min_freq = a.min_freq;
  cfg.threads = a.threads;
  cfg.seed = seed;

  const bool weighted = cfg.loss.kind == LossKind::WeightedCE;
  if (weighted && a.labels_ckpt.empty()) {
    throw UsageError("--loss wce requires --labels-ckpt");
  }

  std::optional<Checkpoint> labels;
  std::vector<std::string> class_labels;
  if (!a.labels_ckpt.empty()) {
    labels = load_checkpoint(a.labels_ckpt);
    require_stage(*labels, Stage::Labels);
    class_labels = labels->class_labels;
  } else if (!a.class_map.empty()) {
    for (const auto& e : parse_class_map(read_binary_file(a.class_map))) class_labels.push_back(e.label);
  } else {
    class_labels = scan_labels(a.train);
  }

  const LabeledDataset train = load_dataset(a.train, class_labels, Split::Train);
  const LabeledDataset dev = load_dataset(a.dev, class_labels, Split::Dev);

  std::vector<BallPoint> class_emb;
  if (weighted) {
    if (!labels->tree || !labels->label_embeddings) {
      throw CheckpointError(CheckpointError::Kind::Format, "labels checkpoint lacks tree or embeddings");
    }
    class_emb = class_embeddings(*labels->tree, *labels->label_embeddings);
  }

  const TrainedClassifier trained =
      train_classifier(train, dev, class_emb, cfg, [&](const EpochRecord& r) {
        out << nlohmann::json{{"epoch", r.epoch},
                              {"train_loss", r.train_loss},
                              {"dev_acc", r.dev_acc},
                              {"dev_wf1", r.dev_wf1}}
                   .dump()
            << '\n';
      });

  Checkpoint ckpt;
  ckpt.stage = Stage::Classifier;
  ckpt.seed = seed;
  ckpt.config = to_json(cfg);
  ckpt.config["best_epoch"] = trained.best_epoch;
  ckpt.class_labels = class_labels;
  if (labels) {
    ckpt.tree = labels->tree;
    if (weighted) ckpt.label_embeddings = labels->label_embeddings;
  }
  ckpt.vocab = trained.model.vocab;
  ckpt.encoder = trained.model.encoder;
  ckpt.head = trained.model.head;
  save_checkpoint(ckpt, a.out);
  return kExitOk;
}

ClassifierModel model_from_checkpoint(const Checkpoint& ckpt) {
  require_stage(ckpt, Stage::Classifier);
  if (!ckpt.vocab || !ckpt.encoder || !ckpt.head) {
    throw CheckpointError(CheckpointError::Kind::Format, "classifier checkpoint is missing parameters");
  }
  return {*ckpt.vocab, *ckpt.encoder, *ckpt.head, ckpt.class_labels};
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string model;
  std::string data;
  std::string out_json;
  std::size_t threads = 1;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const ClassifierModel model = model_from_checkpoint(load_checkpoint(a.model));
  const LabeledDataset ds = load_dataset(a.data, model.class_labels, Split::Test);
  const EvalResult r = evaluate_model(model, ds, a.threads);
  const std::string json = to_json(r, model.class_labels).dump();
  if (!a.out_json.empty()) atomic_write(a.out_json, json + "\n");
  out << json << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string hierarchy;
  std::string class_map;
  std::string out_dir;
  SynthSpec spec;
};

int cmd_synth_data(SynthArgs a, std::uint64_t seed, std::ostream& out) {
  std::optional<fs::path> class_map;
  if (!a.class_map.empty()) class_map = a.class_map;
  a.spec.tree = load_tree(a.hierarchy, class_map, HierarchyMode::Expert, seed);
  a.spec.seed = seed;
  const SyntheticSplits splits = generate_synthetic(a.spec);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  save_dataset(dir / "train.tsv", splits.train);
  save_dataset(dir / "dev.tsv", splits.dev);
  save_dataset(dir / "test.tsv", splits.test);
  out << nlohmann::json{{"classes", a.spec.tree.num_classes()},
                        {"train", splits.train.size()},
                        {"dev", splits.dev.size()},
                        {"test", splits.test.size()},
                        {"out_dir", a.out_dir}}
             .dump()
      << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
  std::string model;
  std::string out;
  std::string data;
  std::string space = "ball";
};

int cmd_export_embeddings(const ExportArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.model);
  std::ostringstream os;
  std::size_t rows = 0;
  if (a.data.empty()) {
    if (!ckpt.label_embeddings) {
      throw CheckpointError(CheckpointError::Kind::Format, "checkpoint holds no label embeddings");
    }
    write_embeddings_tsv(os, *ckpt.label_embeddings);
    rows = ckpt.label_embeddings->size();
  } else {
    // Projections of classifier representations, on the ball or pulled back
    // to the tangent space at the origin.
    const ClassifierModel model = model_from_checkpoint(ckpt);
    const LabeledDataset ds = load_dataset(a.data, model.class_labels, Split::Test);
    const std::size_t dim = model.head.hyp_dim();
    os << "index\tlabel";
    for (std::size_t d = 0; d < dim; ++d) os << "\tdim" << d;
    os << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const BallPoint p = project(model.head, model.represent(ds.samples[i].text));
      const Vec coords = a.space == "tangent" ? log_map(BallPoint::origin(dim), p).coords : p.coords();
      os << i << '\t' << model.class_labels[ds.samples[i].label];
      for (double c : coords) os << '\t' << c;
      os << '\n';
    }
    rows = ds.size();
  }
  atomic_write(a.out, os.str());
  out << nlohmann::json{{"rows", rows}, {"out", a.out}}.dump() << '\n';
  return kExitOk;
}

template <class E>
int report_error(std::ostream& err, std::string_view name, const E& e) {
  err << "error: " << name << ": " << e.what() << '\n';
  return kExitError;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperbolic label-aware text classification", "hyperclass"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed_flag;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed_flag, "RNG seed (overrides HYPERCLASS_SEED; default 42)");
  };

  TrainLabelsArgs tl;
  auto* train_labels = app.add_subcommand("train-labels", "Train hyperbolic label embeddings");
  train_labels->add_option("--hierarchy", tl.hierarchy, "Taxonomy TSV (parent<TAB>child)")->required()->check(CLI::ExistingFile);
  train_labels->add_option("--class-map", tl.class_map, "Class map TSV (label<TAB>node)")->check(CLI::ExistingFile);
  train_labels->add_option("--mode", tl.mode, "Hierarchy mode")->check(CLI::IsMember({"expert", "none", "random"}))->capture_default_str();
  train_labels->add_option("--dim", tl.dim, "Embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
  train_labels->add_option("--epochs", tl.epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
  train_labels->add_option("--neg", tl.negatives, "Negatives per positive pair")->check(CLI::PositiveNumber)->capture_default_str();
  train_labels->add_option("--lr", tl.lr, "Riemannian Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  train_labels->add_option("--burn-in", tl.burn_in, "Epochs at lr/10")->capture_default_str();
  train_labels->add_option("--none-layout", tl.none_layout, "Label placement for --mode none")->check(CLI::IsMember({"init", "uniform"}))->capture_default_str();
  train_labels->add_option("--threads", tl.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  train_labels->add_option("--out", tl.out, "Output checkpoint")->required();
  train_labels->add_option("--embeddings-out", tl.embeddings_out, "Embedding TSV (default: <out>.tsv)");
  add_seed(train_labels);

  TrainClassifierArgs tc;
  auto* train_clf = app.add_subcommand("train-classifier", "Train the encoder and classification head");
  train_clf->add_option("--train", tc.train, "Training TSV")->required()->check(CLI::ExistingFile);
  train_clf->add_option("--dev", tc.dev, "Development TSV")->required()->check(CLI::ExistingFile);
  train_clf->add_option("--labels-ckpt", tc.labels_ckpt, "stage=labels checkpoint")->check(CLI::ExistingFile);
  train_clf->add_option("--class-map", tc.class_map, "Class map fixing class order (ce only)")->check(CLI::ExistingFile);
  train_clf->add_option("--loss", tc.loss, "Loss")->check(CLI::IsMember({"wce", "ce"}))->capture_default_str();
  train_clf->add_option("--weight-norm", tc.weight_norm, "Weight normalisation")->check(CLI::IsMember({"none", "batch-mean"}))->capture_default_str();
  train_clf->add_option("--epochs", tc.epochs, "Epochs")->check(CLI::PositiveNumber)->capture_default_str();
  train_clf->add_option("--batch", tc.batch, "Batch size")->check(CLI::PositiveNumber)->capture_default_str();
  train_clf->add_option("--lr", tc.lr, "AdamW learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  train_clf->add_option("--weight-decay", tc.weight_decay, "AdamW weight decay")->check(CLI::NonNegativeNumber)->capture_default_str();
  train_clf->add_option("--dim-token", tc.dim_token, "Token embedding size")->check(CLI::PositiveNumber)->capture_default_str();
  train_clf->add_option("--dim-hidden", tc.dim_hidden, "Representation size")->check(CLI::PositiveNumber)->capture_default_str();
  train_clf->add_option("--hyp-dim", tc.hyp_dim, "Projection size for --loss ce")->check(CLI::PositiveNumber)->capture_default_str();
  train_clf->add_option("--min-freq", tc.min_freq, "Vocabulary minimum frequency")->check(CLI::PositiveNumber)->capture_default_str();
  train_clf->add_option("--threads", tc.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  train_clf->add_option("--out", tc.out, "Output checkpoint")->required();
  add_seed(train_clf);

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a classifier checkpoint");
  evaluate_cmd->add_option("--model", ev.model, "stage=classifier checkpoint")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--data", ev.data, "Dataset TSV")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--out-json", ev.out_json, "Write the result JSON here");
  evaluate_cmd->add_option("--threads", ev.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic confusable-label corpus");
  synth->add_option("--hierarchy", sy.hierarchy, "Taxonomy TSV")->required()->check(CLI::ExistingFile);
  synth->add_option("--class-map", sy.class_map, "Class map TSV")->check(CLI::ExistingFile);
  synth->add_option("--out-dir", sy.out_dir, "Directory for train/dev/test TSV")->required();
  synth->add_option("--samples-per-class", sy.spec.samples_per_class)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--tokens-per-sample", sy.spec.tokens_per_sample)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--family-fraction", sy.spec.family_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--leaf-fraction", sy.spec.leaf_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--noise-vocab", sy.spec.noise_vocab)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--family-pool", sy.spec.family_pool)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--leaf-pool", sy.spec.leaf_pool)->check(CLI::PositiveNumber)->capture_default_str();
  add_seed(synth);

  ExportArgs ex;
  auto* export_cmd = app.add_subcommand("export-embeddings", "Export label embeddings or sample projections");
  export_cmd->add_option("--model", ex.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--out", ex.out, "Output TSV")->required();
  export_cmd->add_option("--data", ex.data, "Dataset whose projections to export")->check(CLI::ExistingFile);
  export_cmd->add_option("--space", ex.space, "Coordinates for --data")->check(CLI::IsMember({"ball", "tangent"}))->capture_default_str();

  std::vector<std::string> argv_store{"hyperclass"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << target->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const CLI::App* target = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << "usage error: " << e.what() << "\n\n" << target->help();
    return kExitUsage;
  }

  try {
    const std::uint64_t seed = seed_flag ? *seed_flag : default_seed();
    if (*train_labels) return cmd_train_labels(tl, seed, out);
    if (*train_clf) return cmd_train_classifier(tc, seed, out);
    if (*evaluate_cmd) return cmd_evaluate(ev, out);
    if (*synth) return cmd_synth_data(sy, seed, out);
    if (*export_cmd) return cmd_export_embeddings(ex, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TreeError& e) {
    return report_error(err, e.name(), e);
  } catch (const DatasetError& e) {
    return report_error(err, e.name(), e);
  } catch (const CheckpointError& e) {
    return report_error(err, e.name(), e);
  } catch (const ConfigError& e) {
    return report_error(err, e.name(), e);
  } catch (const MetricsError& e) {
    return report_error(err, "MetricsError", e);
  } catch (const std::exception& e) {
    return report_error(err, "Error", e);
  }
  return kExitUsage;
}

}  // namespace hyperclass
