#include <fstream>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "neurec/data.hpp"
#include "neurec/eval.hpp"
#include "neurec/harness.hpp"
#include "neurec/models.hpp"
#include "neurec/nn.hpp"

namespace py = pybind11;
using namespace neurec;

namespace {

// Python-side model handle: the trained model plus the matrix it scores against.
struct Model {
  models::TrainedModel model;
  std::string kind;
};

std::string kind_of(const models::TrainedModel& m) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, models::NeuRecModel>) {
          return v.variant == models::Variant::kUserBased ? "u_neurec" : "i_neurec";
        } else if constexpr (std::is_same_v<T, models::MfModel>) {
          return "bpr_mf";
        } else if constexpr (std::is_same_v<T, models::SlimModel>) {
          return "slim";
        } else {
          return "mostpop";
        }
      },
      m);
}

Model wrap(models::TrainedModel m) {
  auto kind = kind_of(m);
  return Model{std::move(m), std::move(kind)};
}

harness::ExperimentConfig config_from(const py::dict& settings) {
  harness::ExperimentConfig c;
  // Presets first so explicit keys override them.
  if (settings.contains("preset")) harness::apply_preset(c, py::str(settings["preset"]).cast<std::string>());
  for (const auto& [key, value] : settings) {
    const auto k = py::str(key).cast<std::string>();
    if (k == "preset") continue;
    std::string v;
    if (py::isinstance<py::bool_>(value)) {
      v = value.cast<bool>() ? "true" : "false";
    } else if (py::isinstance<py::list>(value) || py::isinstance<py::tuple>(value)) {
      for (const auto& item : value) v += (v.empty() ? "" : ",") + py::str(item).cast<std::string>();
    } else {
      v = py::str(value).cast<std::string>();
    }
    harness::apply_setting(c, k, v);
  }
  return c;
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_neurec, m) {
  m.doc() = "NeuRec and baseline recommenders for implicit feedback";

  py::register_exception<data::DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<nn::NnError>(m, "NnError", PyExc_ValueError);
  py::register_exception<models::ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<eval::EvalError>(m, "EvalError", PyExc_ValueError);
  py::register_exception<harness::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<harness::ExperimentError>(m, "ExperimentError", PyExc_RuntimeError);

  py::class_<data::InteractionMatrix>(m, "InteractionMatrix")
      .def(py::init<int, int, std::vector<data::Entry>>(), py::arg("num_users"), py::arg("num_items"),
           py::arg("entries"))
      .def_property_readonly("num_users", &data::InteractionMatrix::num_users)
      .def_property_readonly("num_items", &data::InteractionMatrix::num_items)
      .def_property_readonly("nnz", &data::InteractionMatrix::nnz)
      .def("entries", &data::InteractionMatrix::entries)
      .def("row", &data::InteractionMatrix::row, py::arg("user"))
      .def("column", &data::InteractionMatrix::column, py::arg("item"))
      .def("contains", &data::InteractionMatrix::contains, py::arg("user"), py::arg("item"))
      .def("to_dense", &data::InteractionMatrix::to_dense)
      .def("__eq__", [](const data::InteractionMatrix& a, const data::InteractionMatrix& b) { return a == b; })
      .def("__repr__", [](const data::InteractionMatrix& x) {
        return "<InteractionMatrix " + std::to_string(x.num_users()) + "x" + std::to_string(x.num_items()) +
               " nnz=" + std::to_string(x.nnz()) + ">";
      });

  py::class_<data::IdMap>(m, "IdMap")
      .def_readonly("users", &data::IdMap::index_to_user)
      .def_readonly("items", &data::IdMap::index_to_item)
      .def("user_index", &data::IdMap::user_index)
      .def("item_index", &data::IdMap::item_index);

  m.def(
      "load_dataset",
      [](const std::string& path, const std::string& delim, const std::string& cols, std::size_t header_lines) {
        data::Format f{data::parse_delimiter(delim), data::parse_columns(cols), header_lines};
        auto built = data::build_matrix(data::load_interactions_file(path, f));
        return py::make_tuple(std::move(built.matrix), std::move(built.ids));
      },
      py::arg("path"), py::arg("delim") = "ws", py::arg("cols") = "user,item,rating", py::arg("header_lines") = 0,
      "Reads a rating file and returns (InteractionMatrix, IdMap).");

  py::class_<data::SplitPair>(m, "Split")
      .def_readonly("train", &data::SplitPair::train)
      .def_readonly("test", &data::SplitPair::test)
      .def_readonly("seed", &data::SplitPair::seed)
      .def_readonly("ratio", &data::SplitPair::ratio)
      .def("test_by_user", &data::SplitPair::test_by_user)
      .def("save", [](const data::SplitPair& s, const std::string& path) { data::persist_split_file(s, path); })
      .def_static("load", &data::load_split_file)
      .def("__eq__", [](const data::SplitPair& a, const data::SplitPair& b) { return a == b; });

  m.def(
      "split_holdout",
      [](const data::InteractionMatrix& x, double ratio, std::uint64_t seed, const std::string& mode) {
        return data::split_holdout(x, ratio, seed, data::parse_split_mode(mode));
      },
      py::arg("matrix"), py::arg("ratio") = 0.8, py::arg("seed") = 1, py::arg("mode") = "global");

  py::class_<models::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_property(
          "variant", [](const models::TrainConfig& c) { return std::string(models::to_string(c.variant)); },
          [](models::TrainConfig& c, const std::string& v) { c.variant = models::parse_variant(v); })
      .def_property(
          "loss", [](const models::TrainConfig& c) { return std::string(models::to_string(c.loss)); },
          [](models::TrainConfig& c, const std::string& v) { c.loss = models::parse_loss(v); })
      .def_property(
          "activation", [](const models::TrainConfig& c) { return std::string(nn::to_string(c.activation)); },
          [](models::TrainConfig& c, const std::string& v) { c.activation = nn::parse_activation(v); })
      .def_readwrite("hidden_layers", &models::TrainConfig::hidden_layers)
      .def_readwrite("width", &models::TrainConfig::width)
      .def_readwrite("k", &models::TrainConfig::k)
      .def_readwrite("dropout", &models::TrainConfig::dropout_rate)
      .def_readwrite("learning_rate", &models::TrainConfig::learning_rate)
      .def_readwrite("l2", &models::TrainConfig::l2_rate)
      .def_readwrite("batch_size", &models::TrainConfig::batch_size)
      .def_readwrite("epochs", &models::TrainConfig::epochs)
      .def_readwrite("seed", &models::TrainConfig::seed)
      .def_readwrite("negatives", &models::TrainConfig::negative_pool_t)
      .def("validate", &models::TrainConfig::validate);

  py::class_<Model>(m, "Model")
      .def_readonly("kind", &Model::kind)
      .def("scores", [](const Model& mm, const data::InteractionMatrix& train,
                        int user) { return models::make_scorer(mm.model, train)(user); },
           py::arg("train"), py::arg("user"))
      .def("parameter_count", [](const Model& mm) { return models::count_parameters(mm.model); })
      .def("save", [](const Model& mm, const std::string& path) { models::save_model_file(mm.model, path); })
      .def_static("load", [](const std::string& path) { return wrap(models::load_model_file(path)); });

  m.def(
      "train_neurec",
      [](const models::TrainConfig& c, const data::InteractionMatrix& train) {
        models::TrainingLog log;
        py::gil_scoped_release release;
        auto model = models::train_neurec(c, train, &log);
        py::gil_scoped_acquire acquire;
        return py::make_tuple(wrap(std::move(model)), log.epoch_loss);
      },
      py::arg("config"), py::arg("train"), "Returns (model, per-epoch training loss).");
  m.def("train_mostpop", [](const data::InteractionMatrix& train) { return wrap(models::train_mostpop(train)); });
  m.def(
      "train_bpr_mf",
      [](const models::TrainConfig& c, const data::InteractionMatrix& train) {
        return wrap(models::train_bpr_mf(c, train));
      },
      py::arg("config"), py::arg("train"));
  m.def(
      "train_slim",
      [](const data::InteractionMatrix& train, double l2, double l1, int iterations, double tolerance) {
        auto s = models::train_slim(train, {l2, l1, iterations, tolerance});
        auto history = s.objective_history;
        return py::make_tuple(wrap(std::move(s)), history);
      },
      py::arg("train"), py::arg("l2") = 0.1, py::arg("l1") = 0.1, py::arg("iterations") = 50,
      py::arg("tolerance") = 1e-6, "Returns (model, objective per sweep).");

  m.def(
      "evaluate",
      [](const Model& mm, const data::SplitPair& split, std::vector<int> cutoffs, bool per_user) {
        const auto report = eval::evaluate_model(models::make_scorer(mm.model, split.train), split, std::move(cutoffs));
        return to_python(eval::to_json(report, per_user));
      },
      py::arg("model"), py::arg("split"), py::arg("cutoffs") = std::vector<int>{5, 10}, py::arg("per_user") = false);

  m.def(
      "rank",
      [](const Eigen::VectorXd& scores, std::vector<int> exclude) {
        std::sort(exclude.begin(), exclude.end());
        return eval::rank_candidates(scores, exclude, 0).items;
      },
      py::arg("scores"), py::arg("exclude") = std::vector<int>{},
      "Item indices by descending score, ties to the lower index.");

  auto metric = [&m](const char* name, auto fn) {
    m.def(
        name,
        [fn](std::vector<int> ranked, std::vector<int> relevant) {
          std::sort(relevant.begin(), relevant.end());
          eval::RankedList r;
          r.items = std::move(ranked);
          return fn(r, relevant);
        },
        py::arg("ranked"), py::arg("relevant"));
  };
  metric("average_precision", [](const eval::RankedList& r, const std::vector<int>& rel) { return eval::average_precision(r, rel); });
  metric("reciprocal_rank", [](const eval::RankedList& r, const std::vector<int>& rel) { return eval::reciprocal_rank(r, rel); });
  metric("ndcg", [](const eval::RankedList& r, const std::vector<int>& rel) { return eval::ndcg(r, rel); });
  m.def(
      "precision_at_k",
      [](std::vector<int> ranked, std::vector<int> relevant, int k) {
        std::sort(relevant.begin(), relevant.end());
        eval::RankedList r;
        r.items = std::move(ranked);
        return eval::precision_at_k(r, relevant, k);
      },
      py::arg("ranked"), py::arg("relevant"), py::arg("k"));
  m.def(
      "recall_at_k",
      [](std::vector<int> ranked, std::vector<int> relevant, int k) {
        std::sort(relevant.begin(), relevant.end());
        eval::RankedList r;
        r.items = std::move(ranked);
        return eval::recall_at_k(r, relevant, k);
      },
      py::arg("ranked"), py::arg("relevant"), py::arg("k"));

  m.def("log_loss_of_margin", &models::log_loss_of_margin, py::arg("margin"));

  m.def(
      "run_experiment",
      [](const py::dict& settings) {
        const auto config = config_from(settings);
        harness::ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = harness::run_experiment(config);
        }
        return to_python(harness::result_to_json(result));
      },
      py::arg("settings"),
      "Runs split/train/evaluate for every seed. Settings use the config-file keys.");
  m.def(
      "result_csv", [](const py::dict& result) {
        const auto text = py::module_::import("json").attr("dumps")(result).cast<std::string>();
        return harness::result_csv(harness::result_from_json(nlohmann::json::parse(text)));
      },
      py::arg("result"));
  m.def("config_keys", &harness::config_keys);
}
