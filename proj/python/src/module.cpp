#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cli.hpp"
#include "hyperclass/data_io.hpp"
#include "hyperclass/manifold_optim.hpp"
#include "hyperclass/training.hpp"

namespace py = pybind11;
using namespace hyperclass;

namespace {

BallPoint point(const Vec& v) { return BallPoint(v); }

ClassifierTrainConfig classifier_config(const py::kwargs& kw) {
  ClassifierTrainConfig c;
  for (const auto& [key, value] : kw) {
    const auto k = key.cast<std::string>();
    if (k == "epochs") c.epochs = value.cast<std::size_t>();
    else if (k == "batch_size") c.batch_size = value.cast<std::size_t>();
    else if (k == "lr") c.lr = value.cast<double>();
    else if (k == "weight_decay") c.weight_decay = value.cast<double>();
    else if (k == "d_tok") c.d_tok = value.cast<std::size_t>();
    else if (k == "d_e") c.d_e = value.cast<std::size_t>();
    else if (k == "hyp_dim") c.hyp_dim = value.cast<std::size_t>();
    else if (k == "min_freq") c.min_freq = value.cast<std::size_t>();
    else if (k == "loss") c.loss.kind = parse_loss_kind(value.cast<std::string>());
    else if (k == "weight_norm") c.loss.weight_norm = parse_weight_norm(value.cast<std::string>());
    else if (k == "seed") c.seed = value.cast<std::uint64_t>();
    else if (k == "threads") c.threads = value.cast<std::size_t>();
    else throw py::type_error("unknown option: " + k);
  }
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hyperbolic label-aware text classification";

  auto base = py::register_exception<std::runtime_error>(m, "HyperclassError", PyExc_RuntimeError);
  py::register_exception<TreeError>(m, "TreeError", base.ptr());
  py::register_exception<DatasetError>(m, "DatasetError", base.ptr());
  py::register_exception<CheckpointError>(m, "CheckpointError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);
  py::register_exception<MetricsError>(m, "MetricsError", PyExc_ValueError);

  m.attr("EPS_BALL") = GeometryConstants::kEpsBall;
  m.attr("EPS_DIV") = GeometryConstants::kEpsDiv;

  m.def("project", [](const Vec& p) { return project_to_ball(p).coords(); }, py::arg("p"));
  m.def("conformal_factor", [](const Vec& x) { return conformal_factor(point(x)); }, py::arg("x"));
  m.def("mobius_add", [](const Vec& x, const Vec& y) { return mobius_add(point(x), point(y)).coords(); },
        py::arg("x"), py::arg("y"));
  m.def("exp_map", [](const Vec& x, const Vec& v) { return exp_map(point(x), v).coords(); }, py::arg("x"),
        py::arg("v"));
  m.def("log_map", [](const Vec& x, const Vec& y) { return log_map(point(x), point(y)).coords; }, py::arg("x"),
        py::arg("y"));
  m.def("distance", [](const Vec& x, const Vec& y) { return distance(point(x), point(y)); }, py::arg("x"),
        py::arg("y"));
  m.def("distance_grad", [](const Vec& x, const Vec& y) { return distance_grad(point(x), point(y)); },
        py::arg("x"), py::arg("y"));
  m.def("riemannian_grad", [](const Vec& theta, const Vec& g) { return riemannian_grad(point(theta), g); },
        py::arg("theta"), py::arg("euclid_grad"));
  m.def("rsgd_step",
        [](const Vec& theta, const Vec& g, double lr) { return rsgd_step(point(theta), g, lr).coords(); },
        py::arg("theta"), py::arg("euclid_grad"), py::arg("lr"));

  py::class_<LabelTree>(m, "LabelTree")
      .def_readonly("nodes", &LabelTree::nodes)
      .def_readonly("edges", &LabelTree::edges)
      .def_readonly("class_labels", &LabelTree::class_labels)
      .def_readonly("class_leaves", &LabelTree::class_leaves)
      .def_property_readonly("mode", [](const LabelTree& t) { return std::string(to_string(t.mode)); })
      .def("depth", &LabelTree::depth)
      .def("__len__", &LabelTree::size);

  m.def(
      "load_tree",
      [](const std::filesystem::path& taxonomy, std::optional<std::filesystem::path> class_map,
         const std::string& mode, std::uint64_t seed) {
        return load_tree(taxonomy, class_map, parse_hierarchy_mode(mode), seed);
      },
      py::arg("taxonomy"), py::arg("class_map") = py::none(), py::arg("mode") = "expert", py::arg("seed") = 42);

  py::class_<LabelEmbeddingSet>(m, "LabelEmbeddings")
      .def_readonly("names", &LabelEmbeddingSet::names)
      .def_readonly("dim", &LabelEmbeddingSet::dim)
      .def_property_readonly("points",
                             [](const LabelEmbeddingSet& e) {
                               std::vector<Vec> out;
                               for (const auto& p : e.points) out.push_back(p.coords());
                               return out;
                             })
      .def("__getitem__", [](const LabelEmbeddingSet& e, const std::string& n) { return e.at(n).coords(); })
      .def("__len__", &LabelEmbeddingSet::size);

  m.def(
      "train_label_embeddings",
      [](const LabelTree& tree, std::size_t dim, std::size_t epochs, std::size_t negatives, double lr,
         std::uint64_t seed) {
        LabelTrainConfig c;
        c.dim = dim;
        c.epochs = epochs;
        c.negatives = negatives;
        c.lr = lr;
        c.seed = seed;
        py::gil_scoped_release release;
        return train_label_embeddings(tree, c);
      },
      py::arg("tree"), py::arg("dim") = 100, py::arg("epochs") = 300, py::arg("negatives") = 10,
      py::arg("lr") = 0.01, py::arg("seed") = 42);
  m.def("uniform_label_layout", &uniform_label_layout, py::arg("tree"), py::arg("dim"), py::arg("seed") = 42);
  m.def("reconstruction_map", &reconstruction_map, py::arg("embeddings"), py::arg("tree"));

  py::class_<LabeledDataset>(m, "Dataset")
      .def_property_readonly("texts", &LabeledDataset::texts)
      .def_property_readonly("labels", &LabeledDataset::labels)
      .def_readonly("label_names", &LabeledDataset::label_names)
      .def("__len__", &LabeledDataset::size);
  m.def("load_dataset",
        [](const std::filesystem::path& p, const std::vector<std::string>& labels) { return load_dataset(p, labels); },
        py::arg("path"), py::arg("label_names"));
  m.def(
      "generate_synthetic",
      [](const LabelTree& tree, std::size_t samples_per_class, std::uint64_t seed) {
        SynthSpec spec;
        spec.tree = tree;
        spec.samples_per_class = samples_per_class;
        spec.seed = seed;
        const auto s = generate_synthetic(spec);
        return py::make_tuple(s.train, s.dev, s.test);
      },
      py::arg("tree"), py::arg("samples_per_class") = 200, py::arg("seed") = 42);

  py::class_<ClassifierModel>(m, "Classifier")
      .def_readonly("class_labels", &ClassifierModel::class_labels)
      .def("predict", &ClassifierModel::predict, py::arg("text"))
      .def("represent", &ClassifierModel::represent, py::arg("text"));
  m.def(
      "train_classifier",
      [](const LabeledDataset& train, const LabeledDataset& dev, const LabelTree& tree,
         std::optional<LabelEmbeddingSet> labels, const py::kwargs& kw) {
        const ClassifierTrainConfig c = classifier_config(kw);
        std::vector<BallPoint> emb;
        if (labels) emb = class_embeddings(tree, *labels);
        py::gil_scoped_release release;
        TrainedClassifier t = train_classifier(train, dev, emb, c);
        return t.model;
      },
      py::arg("train"), py::arg("dev"), py::arg("tree"), py::arg("label_embeddings") = py::none());

  m.def(
      "evaluate",
      [](const std::vector<std::size_t>& preds, const std::vector<std::size_t>& golds, std::size_t num_classes) {
        return py::module_::import("json").attr("loads")(to_json(evaluate(preds, golds, num_classes)).dump());
      },
      py::arg("preds"), py::arg("golds"), py::arg("num_classes"));
  m.def(
      "evaluate_model",
      [](const ClassifierModel& model, const LabeledDataset& ds) {
        return py::module_::import("json").attr("loads")(
            to_json(evaluate_model(model, ds), model.class_labels).dump());
      },
      py::arg("model"), py::arg("dataset"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI invocation and returns (exit_code, stdout, stderr).");
}
