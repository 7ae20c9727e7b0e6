#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "annotsim/harness.hpp"
#include "annotsim/learner.hpp"
#include "annotsim/population.hpp"

namespace annotsim {

namespace fs = std::filesystem;

inline constexpr const char* kToolName = "annotsim";
inline constexpr const char* kToolVersion = "0.1.0";

struct Subsample {
  std::size_t max_rows = 0;
  bool stratified = true;
  std::uint64_t seed = 0;
};

struct DatasetSpec {
  enum class Kind { CsvTabular, IdxImages };
  Kind kind = Kind::CsvTabular;
  fs::path path;         // csv
  fs::path images_path;  // idx
  fs::path labels_path;  // idx
  std::string label_column;
  std::vector<std::string> categorical_columns;
  // Columns used as features; empty means every non-label column.
  std::vector<std::string> feature_columns;
  std::optional<Subsample> subsample;
};

struct LoadedDataset {
  Dataset data;
  std::size_t rows_dropped = 0;
};

LoadedDataset load_csv_dataset(const DatasetSpec& spec);
LoadedDataset load_idx_images(const DatasetSpec& spec);
LoadedDataset load_dataset(const DatasetSpec& spec);
// Keeps at most max_rows rows, stratified by class when requested.
Dataset apply_subsample(const Dataset& data, const Subsample& sub);

// Everything the config file controls.
struct RunConfig {
  DatasetSpec dataset;
  bool has_dataset = false;
  fs::path batch_file;
  std::vector<BatchConfig> batches;
  bool num_labels_given = false;
  std::vector<TestMode> modes{kAllModes.begin(), kAllModes.end()};
  ExperimentConfig experiment;
  int smoothing_window = 25;
  std::string hash;  // sha256 of the canonical config document
};

// Parses a flat JSON config. Relative paths resolve against base_dir.
// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const nlohmann::json& doc, const fs::path& base_dir = {});
RunConfig load_run_config(const fs::path& path);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

// Batch files: a JSON array of annotator records, each tagged with batch_id.
nlohmann::json annotator_to_json(const Annotator& a, int batch_id);
Annotator annotator_from_json(const nlohmann::json& j);
void write_batch_file(const fs::path& path, const std::map<int, std::vector<Annotator>>& batches);
std::map<int, std::vector<Annotator>> read_batch_file(const fs::path& path);

// Run output layout under out_dir:
//   runs/<mode>/batch<B>_seed<S>/{iterations.csv,ledger.csv,run.json}
//   summary.json, manifest.json
fs::path run_dir(const fs::path& out_dir, const RunKey& key);
void write_iterations_csv(const fs::path& path, const ExperimentResult& result);
void write_run_dir(const fs::path& dir, const ExperimentResult& result);
ExperimentResult read_run_dir(const fs::path& dir);
// Every run directory found below `root`.
std::vector<fs::path> find_run_dirs(const fs::path& root);

nlohmann::json summary_to_json(const Summary& summary);
Summary summary_from_json(const nlohmann::json& j);
void write_summary(const fs::path& path, const Summary& summary);
Summary read_summary(const fs::path& path);

struct ManifestInfo {
  std::string config_hash;
  std::vector<std::string> class_names;
  std::size_t rows_dropped = 0;
  std::vector<RunKey> runs;
};
// Writes manifest.json listing every regular file under out_dir with its
// sha256 checksum.
void write_manifest(const fs::path& out_dir, const ManifestInfo& info);

// Exports per-run directories, summary.json and manifest.json.
void export_results(const std::map<RunKey, ExperimentResult>& results, const fs::path& out_dir,
                    const ManifestInfo& info);

// Centered moving average; windows shrink at the series edges.
std::vector<double> moving_average(std::span<const double> values, int window);
// Writes accuracy.csv, f1.csv and uncertainty.csv with columns
// mode,iter,raw,smoothed.
void emit_plot_data(const Summary& summary, const fs::path& out_dir, int window = 25);

}  // namespace annotsim
