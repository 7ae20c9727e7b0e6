// Python bindings for the annotsim core.

#include <algorithm>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "annotsim/dataio.hpp"
#include "annotsim/errors.hpp"
#include "annotsim/harness.hpp"

namespace py = pybind11;
using namespace annotsim;

namespace {

ProbVector probs_of(const std::vector<double>& p) { return ProbVector(p); }

QueryContext context_of(const std::vector<double>& probs, std::optional<double> uncertainty) {
  auto ctx = make_query_context(0, ProbVector(probs));
  if (uncertainty) ctx.uncertainty = *uncertainty;
  return ctx;
}

py::list ranking_to_list(const std::vector<ScoredAnnotator>& r) {
  py::list out;
  for (const auto& s : r) out.append(py::make_tuple(s.annotator_id, s.score));
  return out;
}

py::dict summary_to_dict(const Summary& s) {
  return py::module_::import("json").attr("loads")(summary_to_json(s).dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Annotator-selection simulation for active learning";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  py::enum_<TestMode>(m, "TestMode")
      .value("TEST1", TestMode::Test1_AccuracyOnly)
      .value("TEST2", TestMode::Test2_AccuracyMood)
      .value("TEST3", TestMode::Test3_AccuracyMoodFatigue)
      .value("TEST4", TestMode::Test4_Oracle);
  m.def("parse_modes", &parse_modes, py::arg("csv"));

  // Uncertainty measures over a probability list.
  m.def("least_confidence", [](const std::vector<double>& p) { return least_confidence(probs_of(p)); });
  m.def("margin_confidence", [](const std::vector<double>& p) { return margin_confidence(probs_of(p)); });
  m.def("ratio_confidence", [](const std::vector<double>& p) { return ratio_confidence(probs_of(p)); });
  m.def("entropy", [](const std::vector<double>& p) { return entropy(probs_of(p)); });
  m.def("query_type", [](const std::vector<double>& p) { return query_type(probs_of(p)); });

  py::class_<SimParams>(m, "SimParams")
      .def(py::init<>())
      .def_readwrite("mood_unit_effect", &SimParams::mood_unit_effect)
      .def_readwrite("fatigue_penalty", &SimParams::fatigue_penalty)
      .def_readwrite("fatigue_start", &SimParams::fatigue_start)
      .def_readwrite("fatigue_step", &SimParams::fatigue_step)
      .def_readwrite("period_length", &SimParams::period_length)
      .def_readwrite("periods_per_day", &SimParams::periods_per_day);

  m.def("fatigue_level", &fatigue_level, py::arg("n"), py::arg("params") = SimParams{});
  m.def("effective_accuracy", &effective_accuracy, py::arg("base"), py::arg("mood"),
        py::arg("avg_mood"), py::arg("fatigue_level"), py::arg("params") = SimParams{});

  py::class_<LabelHistory>(m, "LabelHistory")
      .def_readonly("correct", &LabelHistory::correct)
      .def_readonly("total", &LabelHistory::total)
      .def("estimate", &LabelHistory::estimate);

  py::class_<Annotator>(m, "Annotator")
      .def_readonly("id", &Annotator::id)
      .def_property_readonly("age_group", [](const Annotator& a) { return std::string(to_string(a.age_group)); })
      .def_property_readonly("sex", [](const Annotator& a) { return std::string(to_string(a.sex)); })
      .def_property_readonly("chronotype", [](const Annotator& a) { return std::string(to_string(a.chronotype)); })
      .def_readonly("avg_mood", &Annotator::avg_mood)
      .def_readonly("base_overall_accuracy", &Annotator::base_overall_accuracy)
      .def_readonly("base_label_accuracy", &Annotator::base_label_accuracy)
      .def_readonly("history", &Annotator::history)
      .def("overall_estimate", &Annotator::overall_estimate);

  py::class_<BatchConfig>(m, "BatchConfig")
      .def(py::init<>())
      .def_readwrite("batch_id", &BatchConfig::batch_id)
      .def_readwrite("age_group_probs", &BatchConfig::age_group_probs)
      .def_readwrite("sex_probs", &BatchConfig::sex_probs)
      .def_readwrite("n_annotators", &BatchConfig::n_annotators)
      .def_readwrite("rng_seed", &BatchConfig::rng_seed)
      .def_readwrite("num_labels", &BatchConfig::num_labels);
  m.def("generate_batch", &generate_batch, py::arg("config"));

  py::class_<AnnotatorView>(m, "AnnotatorView")
      .def(py::init([](int id, std::vector<double> labels, double overall, int mood, int avg_mood,
                       std::int64_t fatigue_count) {
             return AnnotatorView{id, std::move(labels), overall, mood, avg_mood, fatigue_count};
           }),
           py::arg("annotator_id"), py::arg("label_accuracy"), py::arg("overall_accuracy"),
           py::arg("mood") = 5, py::arg("avg_mood") = 5, py::arg("fatigue_count") = 0)
      .def_readwrite("annotator_id", &AnnotatorView::annotator_id)
      .def_readwrite("label_accuracy", &AnnotatorView::label_accuracy)
      .def_readwrite("overall_accuracy", &AnnotatorView::overall_accuracy)
      .def_readwrite("current_period_mood", &AnnotatorView::current_period_mood)
      .def_readwrite("avg_mood", &AnnotatorView::avg_mood)
      .def_readwrite("fatigue_count", &AnnotatorView::fatigue_count);

  py::class_<UncertaintyStats>(m, "UncertaintyStats")
      .def(py::init<>())
      .def_readonly("count", &UncertaintyStats::count)
      .def_readonly("mean", &UncertaintyStats::mean)
      .def("variance", &UncertaintyStats::variance)
      .def("update", [](UncertaintyStats& s, double u) { s = update_uncertainty_stats(s, u); });

  m.def(
      "recommend_rs",
      [](const std::vector<double>& probs, const std::vector<AnnotatorView>& views, TestMode mode,
         const SimParams& params, const UncertaintyStats& stats, std::optional<double> uncertainty) {
        return ranking_to_list(recommend_rs(context_of(probs, uncertainty), views, mode, params, stats));
      },
      py::arg("probs"), py::arg("views"), py::arg("mode"), py::arg("params") = SimParams{},
      py::arg("stats") = UncertaintyStats{}, py::arg("uncertainty") = py::none(),
      "Knowledge-based ranking as a list of (annotator_id, score).");
  m.def(
      "recommend_optimal",
      [](const std::vector<double>& probs, const std::vector<AnnotatorView>& views,
         const SimParams& params) {
        return ranking_to_list(recommend_optimal(context_of(probs, std::nullopt), views, params));
      },
      py::arg("probs"), py::arg("views"), py::arg("params") = SimParams{});

  py::class_<Dataset, std::shared_ptr<Dataset>>(m, "Dataset")
      .def(py::init([](const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
             auto d = std::make_shared<Dataset>();
             d->n_rows = rows.size();
             d->n_features = rows.empty() ? 0 : rows[0].size();
             for (const auto& r : rows) {
               if (r.size() != d->n_features) throw DataError("ragged feature rows");
               d->features.insert(d->features.end(), r.begin(), r.end());
             }
             d->labels = labels;
             d->num_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
             d->validate();
             return d;
           }),
           py::arg("rows"), py::arg("labels"))
      .def_readonly("n_rows", &Dataset::n_rows)
      .def_readonly("n_features", &Dataset::n_features)
      .def_readonly("num_classes", &Dataset::num_classes)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("class_names", &Dataset::class_names);
  m.def(
      "load_csv",
      [](const fs::path& path, const std::string& label_column,
         const std::vector<std::string>& categorical) {
        DatasetSpec spec;
        spec.path = path;
        spec.label_column = label_column;
        spec.categorical_columns = categorical;
        return std::make_shared<Dataset>(load_csv_dataset(spec).data);
      },
      py::arg("path"), py::arg("label_column"), py::arg("categorical_columns") = std::vector<std::string>{});

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("sim", &ExperimentConfig::sim)
      .def_property(
          "forest_trees", [](const ExperimentConfig& c) { return c.forest.n_trees; },
          [](ExperimentConfig& c, int v) { c.forest.n_trees = v; })
      .def_property(
          "forest_max_depth", [](const ExperimentConfig& c) { return c.forest.max_depth; },
          [](ExperimentConfig& c, int v) { c.forest.max_depth = v; })
      .def_readwrite("max_annotations", &ExperimentConfig::max_annotations)
      .def_readwrite("stop_accuracy", &ExperimentConfig::stop_accuracy)
      .def_readwrite("eval_every", &ExperimentConfig::eval_every);

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("iteration", &IterationRecord::iteration)
      .def_readonly("instance", &IterationRecord::instance)
      .def_readonly("uncertainty", &IterationRecord::uncertainty)
      .def_readonly("annotator_id", &IterationRecord::annotator_id)
      .def_readonly("given_label", &IterationRecord::given_label)
      .def_readonly("true_label", &IterationRecord::true_label)
      .def_readonly("correct", &IterationRecord::correct)
      .def_readonly("accuracy", &IterationRecord::accuracy)
      .def_readonly("f1", &IterationRecord::f1);

  py::class_<ExperimentResult>(m, "ExperimentResult")
      .def_readonly("mode", &ExperimentResult::mode)
      .def_readonly("seed", &ExperimentResult::seed)
      .def_readonly("records", &ExperimentResult::records)
      .def_readonly("correct_rate", &ExperimentResult::correct_rate)
      .def_readonly("final_accuracy", &ExperimentResult::final_accuracy)
      .def_readonly("final_f1", &ExperimentResult::final_f1)
      .def_readonly("mean_uncertainty", &ExperimentResult::mean_uncertainty);

  m.def(
      "run_experiment",
      [](std::shared_ptr<Dataset> data, const std::vector<Annotator>& batch,
         const ExperimentConfig& config, TestMode mode, std::uint64_t seed) {
        py::gil_scoped_release release;
        return run_experiment(data, batch, config, mode, seed);
      },
      py::arg("data"), py::arg("batch"), py::arg("config"), py::arg("mode"), py::arg("seed") = 1);

  m.def(
      "run_config",
      [](const fs::path& config_path, std::optional<std::string> modes, std::optional<fs::path> out) {
        RunConfig cfg = load_run_config(config_path);
        if (modes) cfg.modes = parse_modes(*modes);
        if (!cfg.has_dataset) throw ConfigError("config has no dataset");
        auto loaded = load_dataset(cfg.dataset);
        auto data = std::make_shared<const Dataset>(std::move(loaded.data));
        std::map<int, std::vector<Annotator>> batches;
        if (cfg.batch_file.empty()) {
          for (auto b : cfg.batches) {
            if (!cfg.num_labels_given) b.num_labels = data->num_classes;
            batches[b.batch_id] = generate_batch(b);
          }
        } else {
          batches = read_batch_file(cfg.batch_file);
        }
        std::map<RunKey, ExperimentResult> results;
        {
          py::gil_scoped_release release;
          results = run_grid(data, batches, cfg.experiment, cfg.modes);
        }
        for (auto& [key, r] : results) r.config_hash = cfg.hash;
        if (out) {
          ManifestInfo info;
          info.config_hash = cfg.hash;
          info.class_names = data->class_names;
          info.rows_dropped = loaded.rows_dropped;
          export_results(results, *out, info);
        }
        return summary_to_dict(aggregate(results));
      },
      py::arg("config_path"), py::arg("modes") = py::none(), py::arg("out") = py::none(),
      "Runs every batch, seed and mode of a config file and returns the summary.");
}
