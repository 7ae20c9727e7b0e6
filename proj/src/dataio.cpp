#include "annotsim/dataio.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <boost/tokenizer.hpp>

#include "annotsim/errors.hpp"
#include "annotsim/stratify.hpp"

namespace annotsim {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool is_missing(const std::string& v) {
  return v.empty() || v == "NA" || v == "NaN" || v == "nan" || v == "?" || v == "null" ||
         v == "None";
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return {};
  std::array<char, 32> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  using Sep = boost::escaped_list_separator<char>;
  try {
    boost::tokenizer<Sep> tok(line, Sep('\\', ',', '"'));
    std::vector<std::string> out;
    for (const auto& t : tok) out.push_back(trim(t));
    return out;
  } catch (const boost::escaped_list_error& e) {
    throw DataError("malformed CSV at line " + std::to_string(line_no) + ": " + e.what());
  }
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (static_cast<std::uint32_t>(b[off]) << 24) | (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

void write_text(const fs::path& path, const std::string& text) {
  if (!path.parent_path().empty()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw DataError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Loaders

LoadedDataset load_csv_dataset(const DatasetSpec& spec) {
  if (!fs::exists(spec.path)) throw DataError("dataset file not found: " + spec.path.string());
  const auto lines = read_lines(spec.path);
  if (lines.empty()) throw DataError("empty CSV file: " + spec.path.string());
  const auto header = split_csv_line(lines[0], 1);

  auto column_index = [&header](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto label_col = column_index(spec.label_column);
  if (!label_col) throw DataError("label column '" + spec.label_column + "' not found");

  std::vector<std::size_t> feature_cols;
  if (spec.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != *label_col) feature_cols.push_back(c);
    }
  } else {
    for (const auto& name : spec.feature_columns) {
      const auto c = column_index(name);
      if (!c) throw DataError("feature column '" + name + "' not found");
      if (*c == *label_col) throw DataError("label column listed as a feature");
      feature_cols.push_back(*c);
    }
  }
  std::set<std::string> categorical(spec.categorical_columns.begin(), spec.categorical_columns.end());
  for (const auto& name : categorical) {
    if (!column_index(name)) throw DataError("categorical column '" + name + "' not found");
  }

  std::vector<std::vector<std::string>> rows;
  std::size_t dropped = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto fields = split_csv_line(lines[i], i + 1);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(i + 1) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    bool missing = is_missing(fields[*label_col]);
    for (auto c : feature_cols) missing = missing || is_missing(fields[c]);
    if (missing) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw DataError("no complete rows in " + spec.path.string());

  // Column layout: numeric columns map to one feature, categorical columns to
  // one indicator per category in first-appearance order.
  struct Column {
    std::size_t source;
    bool categorical;
    std::vector<std::string> categories;
  };
  std::vector<Column> columns;
  Dataset data;
  for (auto c : feature_cols) {
    Column col{c, categorical.count(header[c]) > 0, {}};
    if (col.categorical) {
      for (const auto& r : rows) {
        if (std::find(col.categories.begin(), col.categories.end(), r[c]) == col.categories.end()) {
          col.categories.push_back(r[c]);
        }
      }
      for (const auto& cat : col.categories) data.feature_names.push_back(header[c] + "=" + cat);
    } else {
      data.feature_names.push_back(header[c]);
    }
    columns.push_back(std::move(col));
  }

  data.n_rows = rows.size();
  data.n_features = data.feature_names.size();
  data.features.reserve(data.n_rows * data.n_features);
  std::unordered_map<std::string, int> label_ids;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    for (const auto& col : columns) {
      if (col.categorical) {
        for (const auto& cat : col.categories) data.features.push_back(r[col.source] == cat ? 1.0 : 0.0);
      } else {
        const auto v = parse_double(r[col.source]);
        if (!v) {
          throw DataError("non-numeric value '" + r[col.source] + "' in column '" +
                          header[col.source] + "' (declare it categorical or drop it)");
        }
        data.features.push_back(*v);
      }
    }
    const auto& label = r[*label_col];
    auto [it, inserted] = label_ids.emplace(label, static_cast<int>(data.class_names.size()));
    if (inserted) data.class_names.push_back(label);
    data.labels.push_back(it->second);
  }
  data.num_classes = static_cast<int>(data.class_names.size());
  if (data.num_classes < 2) throw DataError("dataset has a single class");

  LoadedDataset out{std::move(data), dropped};
  if (spec.subsample) out.data = apply_subsample(out.data, *spec.subsample);
  return out;
}

LoadedDataset load_idx_images(const DatasetSpec& spec) {
  const auto images = read_bytes(spec.images_path);
  const auto labels = read_bytes(spec.labels_path);
  if (images.size() < 16) throw DataError("truncated IDX image header");
  if (labels.size() < 8) throw DataError("truncated IDX label header");
  if (be32(images, 0) != 0x00000803u) throw DataError("bad IDX image magic number");
  if (be32(labels, 0) != 0x00000801u) throw DataError("bad IDX label magic number");

  const std::size_t n = be32(images, 4);
  const std::size_t h = be32(images, 8);
  const std::size_t w = be32(images, 12);
  const std::size_t n_labels = be32(labels, 4);
  if (n != n_labels) {
    throw DataError("IDX image count " + std::to_string(n) + " does not match label count " +
                    std::to_string(n_labels));
  }
  if (images.size() != 16 + n * h * w) throw DataError("IDX image file length does not match header");
  if (labels.size() != 8 + n) throw DataError("IDX label file length does not match header");

  std::set<int> distinct;
  for (std::size_t i = 0; i < n; ++i) distinct.insert(labels[8 + i]);
  std::map<int, int> dense;
  Dataset data;
  for (int v : distinct) {
    dense[v] = static_cast<int>(data.class_names.size());
    data.class_names.push_back(std::to_string(v));
  }
  data.num_classes = static_cast<int>(data.class_names.size());
  if (data.num_classes < 2) throw DataError("dataset has a single class");

  data.n_rows = n;
  data.n_features = h * w;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      data.feature_names.push_back("px" + std::to_string(r) + "_" + std::to_string(c));
    }
  }
  data.features.resize(n * h * w);
  for (std::size_t i = 0; i < n * h * w; ++i) data.features[i] = images[16 + i] / 255.0;
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) data.labels[i] = dense[labels[8 + i]];

  LoadedDataset out{std::move(data), 0};
  if (spec.subsample) out.data = apply_subsample(out.data, *spec.subsample);
  return out;
}

LoadedDataset load_dataset(const DatasetSpec& spec) {
  return spec.kind == DatasetSpec::Kind::CsvTabular ? load_csv_dataset(spec) : load_idx_images(spec);
}

Dataset apply_subsample(const Dataset& data, const Subsample& sub) {
  if (sub.max_rows == 0 || data.n_rows <= sub.max_rows) return data;
  Rng rng = keyed_rng(sub.seed, Stream::Subsample);
  std::vector<std::size_t> all(data.n_rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> keep;
  if (sub.stratified) {
    keep = stratified_sample(data, all, sub.max_rows, 0, rng);
  } else {
    std::shuffle(all.begin(), all.end(), rng);
    keep.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(sub.max_rows));
    std::sort(keep.begin(), keep.end());
  }
  Dataset out;
  out.n_rows = keep.size();
  out.n_features = data.n_features;
  out.num_classes = data.num_classes;
  out.feature_names = data.feature_names;
  out.class_names = data.class_names;
  out.features.reserve(out.n_rows * out.n_features);
  for (auto r : keep) {
    const auto row = data.row(r);
    out.features.insert(out.features.end(), row.begin(), row.end());
    out.labels.push_back(data.labels[r]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "dataset_kind", "dataset_path", "idx_images_path", "idx_labels_path", "label_column",
      "categorical_columns", "feature_columns", "subsample_max_rows", "subsample_stratified",
      "subsample_seed", "batch_file", "batches", "n_batches", "n_annotators", "batch_seed",
      "age_group_probs", "sex_probs", "num_labels", "modes", "mood_unit_effect",
      "fatigue_penalty", "fatigue_start", "fatigue_step", "period_length", "periods_per_day",
      "forest_trees", "forest_max_depth", "forest_max_features", "forest_max_bins",
      "forest_bootstrap", "uncertainty_warmup", "threshold_sd_multiplier", "seed_set_min",
      "seed_set_per_class", "max_annotations", "stop_accuracy", "eval_every", "rng_seed",
      "replications", "eval_holdout", "holdout_fraction", "smoothing_window"};
  return keys;
}

template <typename T>
void read_key(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

BatchConfig batch_config_from_json(const json& j, const BatchConfig& defaults) {
  BatchConfig b = defaults;
  read_key(j, "batch_id", b.batch_id);
  read_key(j, "n_annotators", b.n_annotators);
  read_key(j, "rng_seed", b.rng_seed);
  read_key(j, "num_labels", b.num_labels);
  if (j.contains("age_group_probs")) b.age_group_probs = j.at("age_group_probs").get<std::array<double, 4>>();
  if (j.contains("sex_probs")) b.sex_probs = j.at("sex_probs").get<std::array<double, 2>>();
  return b;
}

}  // namespace

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig cfg;
  try {
    auto& ds = cfg.dataset;
    if (doc.contains("dataset_kind")) {
      const auto kind = doc.at("dataset_kind").get<std::string>();
      if (kind == "csv_tabular") ds.kind = DatasetSpec::Kind::CsvTabular;
      else if (kind == "idx_images") ds.kind = DatasetSpec::Kind::IdxImages;
      else throw ConfigError("unknown dataset_kind '" + kind + "'");
    }
    if (doc.contains("dataset_path")) ds.path = resolve(base_dir, doc.at("dataset_path").get<std::string>());
    if (doc.contains("idx_images_path")) ds.images_path = resolve(base_dir, doc.at("idx_images_path").get<std::string>());
    if (doc.contains("idx_labels_path")) ds.labels_path = resolve(base_dir, doc.at("idx_labels_path").get<std::string>());
    read_key(doc, "label_column", ds.label_column);
    read_key(doc, "categorical_columns", ds.categorical_columns);
    read_key(doc, "feature_columns", ds.feature_columns);
    if (doc.contains("subsample_max_rows")) {
      Subsample sub;
      sub.max_rows = doc.at("subsample_max_rows").get<std::size_t>();
      read_key(doc, "subsample_stratified", sub.stratified);
      read_key(doc, "subsample_seed", sub.seed);
      ds.subsample = sub;
    }
    cfg.has_dataset = ds.kind == DatasetSpec::Kind::CsvTabular ? !ds.path.empty()
                                                               : !ds.images_path.empty();
    if (cfg.has_dataset && ds.kind == DatasetSpec::Kind::CsvTabular && ds.label_column.empty()) {
      throw ConfigError("label_column is required for csv_tabular datasets");
    }
    if (cfg.has_dataset && ds.kind == DatasetSpec::Kind::IdxImages && ds.labels_path.empty()) {
      throw ConfigError("idx_labels_path is required for idx_images datasets");
    }

    if (doc.contains("batch_file")) cfg.batch_file = resolve(base_dir, doc.at("batch_file").get<std::string>());
    BatchConfig defaults;
    cfg.num_labels_given = doc.contains("num_labels");
    read_key(doc, "num_labels", defaults.num_labels);
    read_key(doc, "n_annotators", defaults.n_annotators);
    if (doc.contains("age_group_probs")) defaults.age_group_probs = doc.at("age_group_probs").get<std::array<double, 4>>();
    if (doc.contains("sex_probs")) defaults.sex_probs = doc.at("sex_probs").get<std::array<double, 2>>();
    if (doc.contains("batches")) {
      for (const auto& b : doc.at("batches")) cfg.batches.push_back(batch_config_from_json(b, defaults));
    } else {
      int n_batches = 3;
      std::uint64_t batch_seed = 1000;
      read_key(doc, "n_batches", n_batches);
      read_key(doc, "batch_seed", batch_seed);
      if (n_batches < 1) throw ConfigError("n_batches must be >= 1");
      for (int i = 0; i < n_batches; ++i) {
        BatchConfig b = defaults;
        b.batch_id = i;
        b.rng_seed = batch_seed + static_cast<std::uint64_t>(i);
        cfg.batches.push_back(b);
      }
    }
    std::set<int> ids;
    for (const auto& b : cfg.batches) {
      if (!ids.insert(b.batch_id).second) throw ConfigError("duplicate batch_id " + std::to_string(b.batch_id));
      b.validate();
    }

    if (doc.contains("modes")) {
      const auto& m = doc.at("modes");
      if (m.is_string()) {
        cfg.modes = parse_modes(m.get<std::string>());
      } else {
        std::string joined;
        for (const auto& s : m) joined += s.get<std::string>() + ",";
        cfg.modes = parse_modes(joined);
      }
    }

    auto& ex = cfg.experiment;
    read_key(doc, "mood_unit_effect", ex.sim.mood_unit_effect);
    read_key(doc, "fatigue_penalty", ex.sim.fatigue_penalty);
    read_key(doc, "fatigue_start", ex.sim.fatigue_start);
    read_key(doc, "fatigue_step", ex.sim.fatigue_step);
    read_key(doc, "period_length", ex.sim.period_length);
    read_key(doc, "periods_per_day", ex.sim.periods_per_day);
    read_key(doc, "forest_trees", ex.forest.n_trees);
    read_key(doc, "forest_max_depth", ex.forest.max_depth);
    read_key(doc, "forest_max_features", ex.forest.max_features);
    read_key(doc, "forest_max_bins", ex.forest.max_bins);
    read_key(doc, "forest_bootstrap", ex.forest.bootstrap);
    read_key(doc, "uncertainty_warmup", ex.selector.warmup_queries);
    read_key(doc, "threshold_sd_multiplier", ex.selector.sd_multiplier);
    read_key(doc, "seed_set_min", ex.seed_set_min);
    read_key(doc, "seed_set_per_class", ex.seed_set_per_class);
    read_key(doc, "max_annotations", ex.max_annotations);
    read_key(doc, "stop_accuracy", ex.stop_accuracy);
    read_key(doc, "eval_every", ex.eval_every);
    read_key(doc, "rng_seed", ex.rng_seed);
    read_key(doc, "replications", ex.replications);
    read_key(doc, "eval_holdout", ex.eval_holdout);
    read_key(doc, "holdout_fraction", ex.holdout_fraction);
    read_key(doc, "smoothing_window", cfg.smoothing_window);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.experiment.validate();
  if (cfg.smoothing_window < 1) throw ConfigError("smoothing_window must be >= 1");
  cfg.hash = sha256_hex(doc.dump());
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  const auto bytes = read_bytes(path);
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// ---------------------------------------------------------------------------
// Batch files

json annotator_to_json(const Annotator& a, int batch_id) {
  json history = json::array();
  for (const auto& h : a.history) history.push_back({{"correct", h.correct}, {"total", h.total}});
  return {{"batch_id", batch_id},
          {"id", a.id},
          {"age_group", to_string(a.age_group)},
          {"sex", to_string(a.sex)},
          {"chronotype", to_string(a.chronotype)},
          {"avg_mood", a.avg_mood},
          {"base_overall_accuracy", a.base_overall_accuracy},
          {"base_label_accuracy", a.base_label_accuracy},
          {"history", history}};
}

Annotator annotator_from_json(const json& j) {
  try {
    Annotator a;
    a.id = j.at("id").get<int>();
    a.age_group = age_group_from_string(j.at("age_group").get<std::string>());
    a.sex = sex_from_string(j.at("sex").get<std::string>());
    a.chronotype = chronotype_from_string(j.at("chronotype").get<std::string>());
    a.avg_mood = j.at("avg_mood").get<int>();
    a.base_overall_accuracy = j.at("base_overall_accuracy").get<double>();
    a.base_label_accuracy = j.at("base_label_accuracy").get<std::vector<double>>();
    for (const auto& h : j.at("history")) {
      a.history.push_back({h.at("correct").get<std::int64_t>(), h.at("total").get<std::int64_t>()});
    }
    if (a.id < 0) throw DataError("negative annotator id");
    if (a.avg_mood < kMinAvgMood || a.avg_mood > kMaxAvgMood) throw DataError("avg_mood outside [3, 7]");
    if (a.history.size() != a.base_label_accuracy.size()) throw DataError("history/accuracy length mismatch");
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(a.base_overall_accuracy)) throw DataError("base_overall_accuracy outside [0, 1]");
    for (double v : a.base_label_accuracy) {
      if (!in_unit(v)) throw DataError("base_label_accuracy outside [0, 1]");
    }
    for (const auto& h : a.history) {
      if (h.correct < 0 || h.total < h.correct) throw DataError("inconsistent history counts");
    }
    return a;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad annotator record: ") + e.what());
  }
}

void write_batch_file(const fs::path& path, const std::map<int, std::vector<Annotator>>& batches) {
  json doc = json::array();
  for (const auto& [batch_id, annotators] : batches) {
    for (const auto& a : annotators) doc.push_back(annotator_to_json(a, batch_id));
  }
  write_text(path, doc.dump(2) + "\n");
}

std::map<int, std::vector<Annotator>> read_batch_file(const fs::path& path) {
  const json doc = read_json(path);
  if (!doc.is_array()) throw DataError("batch file must hold a JSON array");
  std::map<int, std::vector<Annotator>> batches;
  for (const auto& rec : doc) {
    const int batch_id = rec.value("batch_id", 0);
    batches[batch_id].push_back(annotator_from_json(rec));
  }
  if (batches.empty()) throw DataError("batch file holds no annotators");
  return batches;
}

// ---------------------------------------------------------------------------
// Results

fs::path run_dir(const fs::path& out_dir, const RunKey& key) {
  return out_dir / "runs" / std::string(to_string(key.mode)) /
         ("batch" + std::to_string(key.batch_id) + "_seed" + std::to_string(key.seed));
}

void write_iterations_csv(const fs::path& path, const ExperimentResult& result) {
  std::string text = "iter,instance,uncertainty,annotator_id,given_label,true_label,correct,accuracy,f1\n";
  for (const auto& r : result.records) {
    text += std::to_string(r.iteration) + ',' + std::to_string(r.instance) + ',' +
            format_double(r.uncertainty) + ',' + std::to_string(r.annotator_id) + ',' +
            std::to_string(r.given_label) + ',' + std::to_string(r.true_label) + ',' +
            (r.correct ? "1" : "0") + ',' + format_double(r.accuracy) + ',' + format_double(r.f1) +
            '\n';
  }
  write_text(path, text);
}

void write_run_dir(const fs::path& dir, const ExperimentResult& result) {
  write_iterations_csv(dir / "iterations.csv", result);
  std::string ledger = "annotator_id,day,period,count\n";
  for (const auto& [key, n] : result.ledger.entries()) {
    const auto& [id, day, period] = key;
    ledger += std::to_string(id) + ',' + std::to_string(day) + ',' + std::to_string(period) + ',' +
              std::to_string(n) + '\n';
  }
  write_text(dir / "ledger.csv", ledger);
  const json meta{{"mode", to_string(result.mode)},
                  {"batch_id", result.batch_id},
                  {"seed", result.seed},
                  {"config_hash", result.config_hash},
                  {"seed_size", result.seed_size},
                  {"n_iterations", result.records.size()},
                  {"correct_rate", result.correct_rate},
                  {"final_accuracy", result.final_accuracy},
                  {"final_f1", result.final_f1},
                  {"mean_uncertainty", result.mean_uncertainty},
                  {"wall_seconds", result.wall_seconds},
                  {"cpu_seconds", result.cpu_seconds}};
  write_text(dir / "run.json", meta.dump(2) + "\n");
}

ExperimentResult read_run_dir(const fs::path& dir) {
  const json meta = read_json(dir / "run.json");
  ExperimentResult r;
  try {
    r.mode = test_mode_from_string(meta.at("mode").get<std::string>());
    r.batch_id = meta.at("batch_id").get<int>();
    r.seed = meta.at("seed").get<std::uint64_t>();
    r.config_hash = meta.at("config_hash").get<std::string>();
    r.seed_size = meta.at("seed_size").get<std::size_t>();
    r.wall_seconds = meta.at("wall_seconds").get<double>();
    r.cpu_seconds = meta.at("cpu_seconds").get<double>();
  } catch (const json::exception& e) {
    throw DataError("bad run.json in " + dir.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }

  const auto lines = read_lines(dir / "iterations.csv");
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(lines[i]);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (lines[i].back() == ',') f.emplace_back();
    if (f.size() != 9) throw DataError("bad iterations.csv row in " + dir.string());
    auto num = [&](const std::string& s) {
      const auto v = parse_double(s);
      if (!v) throw DataError("bad number '" + s + "' in " + dir.string());
      return *v;
    };
    IterationRecord rec;
    rec.iteration = static_cast<int>(num(f[0]));
    rec.instance = static_cast<std::size_t>(num(f[1]));
    rec.uncertainty = num(f[2]);
    rec.annotator_id = static_cast<int>(num(f[3]));
    rec.given_label = static_cast<int>(num(f[4]));
    rec.true_label = static_cast<int>(num(f[5]));
    rec.correct = f[6] == "1";
    rec.accuracy = f[7].empty() ? nan : num(f[7]);
    rec.f1 = f[8].empty() ? nan : num(f[8]);
    r.records.push_back(rec);
  }
  const auto ledger_path = dir / "ledger.csv";
  if (fs::exists(ledger_path)) {
    const auto ledger_lines = read_lines(ledger_path);
    for (std::size_t i = 1; i < ledger_lines.size(); ++i) {
      if (ledger_lines[i].empty()) continue;
      int id = 0, day = 0, period = 0;
      long long n = 0;
      if (std::sscanf(ledger_lines[i].c_str(), "%d,%d,%d,%lld", &id, &day, &period, &n) != 4) {
        throw DataError("bad ledger.csv row in " + dir.string());
      }
      r.ledger.record(id, day, period, n);
    }
  }
  r.finalize_metrics();
  return r;
}

std::vector<fs::path> find_run_dirs(const fs::path& root) {
  std::vector<fs::path> dirs;
  if (!fs::exists(root)) throw DataError("input directory not found: " + root.string());
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "run.json") {
      dirs.push_back(entry.path().parent_path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

namespace {

json curve_to_json(const Curve& c) { return {{"iteration", c.iteration}, {"value", c.value}}; }

Curve curve_from_json(const json& j) {
  Curve c;
  c.iteration = j.at("iteration").get<std::vector<int>>();
  c.value = j.at("value").get<std::vector<double>>();
  return c;
}

}  // namespace

json summary_to_json(const Summary& summary) {
  json modes = json::object();
  for (const auto& m : summary.modes) {
    modes[std::string(to_string(m.mode))] = {
        {"n_runs", m.n_runs},
        {"correct_rate", m.correct_rate},
        {"final_accuracy", m.final_accuracy},
        {"final_f1", m.final_f1},
        {"mean_uncertainty", m.mean_uncertainty},
        {"wall_seconds", m.wall_seconds},
        {"cpu_seconds", m.cpu_seconds},
        {"curves",
         {{"uncertainty", curve_to_json(m.uncertainty)},
          {"accuracy", curve_to_json(m.accuracy)},
          {"f1", curve_to_json(m.f1)}}}};
  }
  return {{"config_hash", summary.config_hash}, {"modes", modes}};
}

Summary summary_from_json(const json& j) {
  try {
    Summary s;
    s.config_hash = j.at("config_hash").get<std::string>();
    const auto& modes = j.at("modes");
    for (auto mode : kAllModes) {
      const std::string name(to_string(mode));
      if (!modes.contains(name)) continue;
      const auto& m = modes.at(name);
      ModeSummary ms;
      ms.mode = mode;
      ms.n_runs = m.at("n_runs").get<int>();
      ms.correct_rate = m.at("correct_rate").get<double>();
      ms.final_accuracy = m.at("final_accuracy").get<double>();
      ms.final_f1 = m.at("final_f1").get<double>();
      ms.mean_uncertainty = m.at("mean_uncertainty").get<double>();
      ms.wall_seconds = m.at("wall_seconds").get<double>();
      ms.cpu_seconds = m.at("cpu_seconds").get<double>();
      const auto& curves = m.at("curves");
      ms.uncertainty = curve_from_json(curves.at("uncertainty"));
      ms.accuracy = curve_from_json(curves.at("accuracy"));
      ms.f1 = curve_from_json(curves.at("f1"));
      s.modes.push_back(std::move(ms));
    }
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad summary document: ") + e.what());
  }
}

void write_summary(const fs::path& path, const Summary& summary) {
  write_text(path, summary_to_json(summary).dump(2) + "\n");
}

Summary read_summary(const fs::path& path) { return summary_from_json(read_json(path)); }

void write_manifest(const fs::path& out_dir, const ManifestInfo& info) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  json inventory = json::array();
  for (const auto& f : files) {
    inventory.push_back({{"path", fs::relative(f, out_dir).generic_string()},
                         {"sha256", sha256_file(f)},
                         {"bytes", fs::file_size(f)}});
  }
  json runs = json::array();
  for (const auto& k : info.runs) {
    runs.push_back({{"mode", to_string(k.mode)}, {"batch_id", k.batch_id}, {"seed", k.seed}});
  }
  const json doc{{"tool", kToolName},
                 {"version", kToolVersion},
                 {"config_hash", info.config_hash},
                 {"label_mapping", info.class_names},
                 {"rows_dropped", info.rows_dropped},
                 {"runs", runs},
                 {"files", inventory}};
  write_text(out_dir / "manifest.json", doc.dump(2) + "\n");
}

void export_results(const std::map<RunKey, ExperimentResult>& results, const fs::path& out_dir,
                    const ManifestInfo& info) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw DataError("cannot create output directory " + out_dir.string());
  ManifestInfo full = info;
  full.runs.clear();
  for (const auto& [key, result] : results) {
    write_run_dir(run_dir(out_dir, key), result);
    full.runs.push_back(key);
  }
  write_summary(out_dir / "summary.json", aggregate(results));
  write_manifest(out_dir, full);
}

std::vector<double> moving_average(std::span<const double> values, int window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const std::ptrdiff_t left = (window - 1) / 2;
  const std::ptrdiff_t right = window / 2;
  std::vector<double> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto lo = std::max<std::ptrdiff_t>(0, i - left);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, i + right);
    double s = 0.0;
    for (auto k = lo; k <= hi; ++k) s += values[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

void emit_plot_data(const Summary& summary, const fs::path& out_dir, int window) {
  const std::array<std::pair<const char*, Curve ModeSummary::*>, 3> metrics{
      {{"accuracy", &ModeSummary::accuracy},
       {"f1", &ModeSummary::f1},
       {"uncertainty", &ModeSummary::uncertainty}}};
  for (const auto& [name, member] : metrics) {
    std::string text = "mode,iter,raw,smoothed\n";
    for (const auto& m : summary.modes) {
      const Curve& c = m.*member;
      const auto smooth = moving_average(c.value, window);
      for (std::size_t i = 0; i < c.value.size(); ++i) {
        text += std::string(to_string(m.mode)) + ',' + std::to_string(c.iteration[i]) + ',' +
                format_double(c.value[i]) + ',' + format_double(smooth[i]) + '\n';
      }
    }
    write_text(out_dir / (std::string(name) + ".csv"), text);
  }
}

}  // namespace annotsim
