// annotsim command line: generate annotator batches, run experiments,
// re-aggregate result directories and emit plot series.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "annotsim/dataio.hpp"
#include "annotsim/errors.hpp"
#include "annotsim/harness.hpp"

using namespace annotsim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::map<int, std::vector<Annotator>> generate_batches(const RunConfig& cfg, int num_labels) {
  std::map<int, std::vector<Annotator>> batches;
  for (auto b : cfg.batches) {
    if (!cfg.num_labels_given) b.num_labels = num_labels;
    batches[b.batch_id] = generate_batch(b);
  }
  return batches;
}

void print_summary(const Summary& s) {
  std::printf("%-6s %6s %10s %10s %10s %12s %10s\n", "mode", "runs", "correct", "accuracy", "f1",
              "uncertainty", "cpu_s");
  for (const auto& m : s.modes) {
    std::printf("%-6s %6d %10.4f %10.4f %10.4f %12.4f %10.2f\n",
                std::string(to_string(m.mode)).c_str(), m.n_runs, m.correct_rate, m.final_accuracy,
                m.final_f1, m.mean_uncertainty, m.cpu_seconds);
  }
}

int cmd_gen_annotators(const std::string& config_path, const std::string& out) {
  const RunConfig cfg = load_run_config(config_path);
  int num_labels = cfg.batches.front().num_labels;
  if (!cfg.num_labels_given) {
    if (!cfg.has_dataset) {
      throw ConfigError("gen-annotators needs num_labels or a dataset to count labels from");
    }
    num_labels = load_dataset(cfg.dataset).data.num_classes;
  }
  const auto batches = generate_batches(cfg, num_labels);
  write_batch_file(out, batches);
  std::size_t n = 0;
  for (const auto& [id, b] : batches) n += b.size();
  std::cerr << "wrote " << n << " annotators in " << batches.size() << " batches to " << out << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& modes_arg, const std::string& out) {
  RunConfig cfg = load_run_config(config_path);
  if (!modes_arg.empty()) cfg.modes = parse_modes(modes_arg);
  if (!cfg.has_dataset) throw ConfigError("run needs a dataset");

  auto loaded = load_dataset(cfg.dataset);
  auto data = std::make_shared<const Dataset>(std::move(loaded.data));
  const auto batches = cfg.batch_file.empty() ? generate_batches(cfg, data->num_classes)
                                              : read_batch_file(cfg.batch_file);

  std::cerr << "dataset: " << data->n_rows << " rows, " << data->n_features << " features, "
            << data->num_classes << " classes (" << loaded.rows_dropped << " rows dropped)\n";
  auto results = run_grid(data, batches, cfg.experiment, cfg.modes,
                          [](const RunKey& k, const ExperimentResult& r) {
                            std::cerr << to_string(k.mode) << " batch " << k.batch_id << " seed "
                                      << k.seed << ": " << r.records.size()
                                      << " annotations, correct rate " << r.correct_rate << "\n";
                          });
  for (auto& [key, r] : results) r.config_hash = cfg.hash;

  ManifestInfo info;
  info.config_hash = cfg.hash;
  info.class_names = data->class_names;
  info.rows_dropped = loaded.rows_dropped;
  export_results(results, out, info);
  print_summary(aggregate(results));
  return 0;
}

int cmd_summarize(const std::vector<std::string>& inputs, const std::string& out) {
  std::map<RunKey, ExperimentResult> results;
  for (const auto& in : inputs) {
    for (const auto& dir : find_run_dirs(in)) {
      auto r = read_run_dir(dir);
      const RunKey key{r.batch_id, r.seed, r.mode};
      if (!results.emplace(key, std::move(r)).second) {
        throw DataError("run " + dir.string() + " appears more than once");
      }
    }
  }
  if (results.empty()) throw DataError("no run directories found");
  const Summary summary = aggregate(results);
  fs::create_directories(out);
  write_summary(fs::path(out) / "summary.json", summary);
  ManifestInfo info;
  info.config_hash = summary.config_hash;
  for (const auto& [key, r] : results) info.runs.push_back(key);
  write_manifest(out, info);
  print_summary(summary);
  return 0;
}

int cmd_plot_data(const std::string& in, const std::string& out, int window) {
  const Summary summary = read_summary(fs::path(in) / "summary.json");
  fs::create_directories(out);
  emit_plot_data(summary, out, window);

  ManifestInfo info;
  info.config_hash = summary.config_hash;
  const auto existing = fs::path(out) / "manifest.json";
  if (fs::exists(existing)) {
    std::ifstream f(existing);
    const auto doc = nlohmann::json::parse(f, nullptr, false);
    if (!doc.is_discarded()) {
      info.class_names = doc.value("label_mapping", std::vector<std::string>{});
      info.rows_dropped = doc.value("rows_dropped", std::size_t{0});
      for (const auto& r : doc.value("runs", nlohmann::json::array())) {
        info.runs.push_back({r.at("batch_id").get<int>(), r.at("seed").get<std::uint64_t>(),
                             test_mode_from_string(r.at("mode").get<std::string>())});
      }
    }
  }
  write_manifest(out, info);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Annotator-selection simulation for active learning"};
  app.require_subcommand(1);

  std::string config, out, modes;
  std::vector<std::string> inputs;
  int window = 25;

  auto* gen = app.add_subcommand("gen-annotators", "Generate annotator batches to a JSON file");
  gen->add_option("--config", config, "Config file")->required();
  gen->add_option("--out", out, "Output batch file")->required();

  auto* run = app.add_subcommand("run", "Run experiments and export results");
  run->add_option("--config", config, "Config file")->required();
  run->add_option("--modes", modes, "Comma-separated modes (test1,test2,test3,test4)");
  run->add_option("--out", out, "Output directory")->required();

  auto* summarize = app.add_subcommand("summarize", "Aggregate run directories");
  summarize->add_option("--in", inputs, "Result directories")->required()->expected(1, -1);
  summarize->add_option("--out", out, "Output directory")->required();

  auto* plot = app.add_subcommand("plot-data", "Emit raw and smoothed metric series");
  plot->add_option("--in", config, "Directory holding summary.json")->required();
  plot->add_option("--out", out, "Output directory")->required();
  plot->add_option("--window", window, "Moving-average window")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_annotators(config, out);
    if (*run) return cmd_run(config, modes, out);
    if (*summarize) return cmd_summarize(inputs, out);
    if (*plot) return cmd_plot_data(config, out, window);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
