#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"

#include "annotsim/dataio.hpp"
#include "annotsim/errors.hpp"

using namespace annotsim;

namespace {

// Fresh scratch directory per test case.
struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("annotsim_test_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

void put_be32(std::string& s, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xFF));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Writes an IDX pair of n images of h x w pixels; pixel value = (i + j) % 256.
void write_idx(const fs::path& images, const fs::path& labels, std::uint32_t n, std::uint32_t h,
               std::uint32_t w, const std::vector<std::uint8_t>& ys, bool truncate = false) {
  std::string img, lab;
  put_be32(img, 0x803);
  put_be32(img, n);
  put_be32(img, h);
  put_be32(img, w);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < h * w; ++j) img.push_back(static_cast<char>((i + j) % 256));
  }
  if (truncate) img.pop_back();
  put_be32(lab, 0x801);
  put_be32(lab, n);
  for (auto y : ys) lab.push_back(static_cast<char>(y));
  std::ofstream(images, std::ios::binary) << img;
  std::ofstream(labels, std::ios::binary) << lab;
}

}  // namespace

TEST_CASE("csv labels map in first-appearance order") {
  TempDir t;
  DatasetSpec s;
  s.path = t.write("toy.csv", "x,y,label\n1,2,a\n3,4,b\n5,6,a\n");
  s.label_column = "label";
  const auto d = load_csv_dataset(s).data;
  CHECK(d.labels == std::vector<int>{0, 1, 0});
  CHECK(d.num_classes == 2);
  CHECK(d.class_names == std::vector<std::string>{"a", "b"});
  CHECK(d.feature_names == std::vector<std::string>{"x", "y"});
  CHECK(d.features == std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("csv rows with missing values are dropped and counted") {
  TempDir t;
  DatasetSpec s;
  s.path = t.write("titanic.csv",
                   "survived,pclass,sex,age,name\n"
                   "0,3,male,22,\"Braund, Mr. Owen\"\n"
                   "1,1,female,,\"Cumings, Mrs. John\"\n"
                   "1,3,female,26,\"Heikkinen, Miss. Laina\"\n"
                   "0,2,male,35,\"Allen, Mr. William\"\n");
  s.label_column = "survived";
  s.categorical_columns = {"sex"};
  s.feature_columns = {"pclass", "sex", "age"};
  const auto loaded = load_csv_dataset(s);
  CHECK(loaded.rows_dropped == 1);
  CHECK(loaded.data.n_rows == 3);
  CHECK(loaded.data.feature_names == std::vector<std::string>{"pclass", "sex=male", "sex=female", "age"});
  CHECK(loaded.data.row(1)[1] == 0.0);
  CHECK(loaded.data.row(1)[2] == 1.0);
  CHECK(loaded.data.row(2)[3] == 35.0);
}

TEST_CASE("one-hot columns have exactly one hot entry") {
  TempDir t;
  DatasetSpec s;
  s.path = t.write("c.csv", "color,v,y\nred,1,0\ngreen,2,1\nblue,3,0\nred,4,1\ngreen,5,0\n");
  s.label_column = "y";
  s.categorical_columns = {"color"};
  const auto d = load_csv_dataset(s).data;
  REQUIRE(d.n_features == 4);
  const std::vector<int> expected{0, 1, 2, 0, 1};
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    double hot = 0.0;
    std::size_t which = 0;
    for (std::size_t f = 0; f < 3; ++f) {
      hot += d.at(r, f);
      if (d.at(r, f) == 1.0) which = f;
    }
    CHECK(hot == 1.0);
    CHECK(static_cast<int>(which) == expected[r]);
  }
}

TEST_CASE("csv error cases") {
  TempDir t;
  DatasetSpec s;
  s.label_column = "y";
  s.path = t.path / "missing.csv";
  CHECK_THROWS_AS(load_csv_dataset(s), DataError);
  s.path = t.write("nolabel.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(load_csv_dataset(s), DataError);
  s.path = t.write("single.csv", "a,y\n1,k\n2,k\n");
  CHECK_THROWS_AS(load_csv_dataset(s), DataError);
  s.path = t.write("text.csv", "a,y\nfoo,0\n2,1\n");
  CHECK_THROWS_AS(load_csv_dataset(s), DataError);
  s.path = t.write("ragged.csv", "a,y\n1,0,3\n2,1\n");
  CHECK_THROWS_AS(load_csv_dataset(s), DataError);
}

TEST_CASE("csv loading is deterministic") {
  TempDir t;
  DatasetSpec s;
  s.path = t.write("d.csv", "a,b,y\n0.1,2,x\n0.3,4,z\n0.5,6,x\n");
  s.label_column = "y";
  CHECK(load_csv_dataset(s).data == load_csv_dataset(s).data);
}

TEST_CASE("idx images load with scaling and header dimensions") {
  TempDir t;
  DatasetSpec s;
  s.kind = DatasetSpec::Kind::IdxImages;
  s.images_path = t.path / "img.idx";
  s.labels_path = t.path / "lab.idx";
  write_idx(s.images_path, s.labels_path, 4, 28, 28, {3, 7, 3, 9});
  const auto d = load_dataset(s).data;
  CHECK(d.n_features == 784);
  CHECK(d.n_rows == 4);
  CHECK(d.num_classes == 3);
  CHECK(d.labels == std::vector<int>{0, 1, 0, 2});
  CHECK(d.class_names == std::vector<std::string>{"3", "7", "9"});
  CHECK(d.at(0, 255) == 1.0);
  CHECK(d.at(0, 0) == 0.0);
  CHECK(d.at(1, 0) == doctest::Approx(1.0 / 255.0));

  write_idx(s.images_path, s.labels_path, 4, 28, 28, {3, 7, 3, 9}, true);
  CHECK_THROWS_AS(load_dataset(s), DataError);
  write_idx(s.images_path, s.labels_path, 4, 2, 2, {3, 7, 3});
  CHECK_THROWS_AS(load_dataset(s), DataError);
  std::ofstream(s.labels_path, std::ios::binary) << std::string("\0\0\x08\x03\0\0\0\0", 8);
  CHECK_THROWS_AS(load_dataset(s), DataError);
}

TEST_CASE("stratified subsample keeps classes balanced") {
  Dataset d;
  d.n_rows = 5000;
  d.n_features = 1;
  d.num_classes = 10;
  for (std::size_t i = 0; i < d.n_rows; ++i) {
    d.features.push_back(static_cast<double>(i));
    d.labels.push_back(static_cast<int>(i % 10));
  }
  const auto sub = apply_subsample(d, Subsample{2000, true, 3});
  CHECK(sub.n_rows == 2000);
  const auto counts = sub.class_counts();
  for (auto c : counts) CHECK(c >= 190);
  CHECK(apply_subsample(d, Subsample{2000, true, 3}) == sub);
  CHECK(apply_subsample(d, Subsample{100, false, 3}).n_rows == 100);
  CHECK(apply_subsample(d, Subsample{9000, true, 3}) == d);
}

TEST_CASE("config parsing") {
  TempDir t;
  t.write("d.csv", "a,y\n1,0\n2,1\n");
  nlohmann::json doc = {{"dataset_kind", "csv_tabular"},
                        {"dataset_path", "d.csv"},
                        {"label_column", "y"},
                        {"fatigue_penalty", 0.04},
                        {"modes", "test1,test3"},
                        {"n_batches", 2}};
  auto cfg = parse_run_config(doc, t.path);
  CHECK(cfg.dataset.path == t.path / "d.csv");
  CHECK(cfg.experiment.sim.fatigue_penalty == 0.04);
  CHECK(cfg.experiment.sim.period_length == 204);
  CHECK(cfg.modes.size() == 2);
  CHECK(cfg.batches.size() == 2);
  CHECK(cfg.batches[0].batch_id != cfg.batches[1].batch_id);
  CHECK(cfg.hash.size() == 64);
  CHECK(parse_run_config(doc, t.path).hash == cfg.hash);

  auto bad = doc;
  bad["fatigue_penalyt"] = 0.1;
  CHECK_THROWS_AS(parse_run_config(bad, t.path), ConfigError);
  bad = doc;
  bad["eval_every"] = "ten";
  CHECK_THROWS_AS(parse_run_config(bad, t.path), ConfigError);
  bad = doc;
  bad["modes"] = "test9";
  CHECK_THROWS_AS(parse_run_config(bad, t.path), ConfigError);
  bad = doc;
  bad.erase("label_column");
  CHECK_THROWS_AS(parse_run_config(bad, t.path), ConfigError);
  t.write("broken.json", "{ not json");
  CHECK_THROWS_AS(load_run_config(t.path / "broken.json"), ConfigError);
}

TEST_CASE("sha256 known answer") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("batch file round trip") {
  TempDir t;
  BatchConfig b;
  b.n_annotators = 5;
  b.num_labels = 3;
  std::map<int, std::vector<Annotator>> batches;
  for (int id : {0, 4}) {
    b.batch_id = id;
    b.rng_seed = static_cast<std::uint64_t>(id) + 10;
    batches[id] = generate_batch(b);
  }
  batches[4][2].history[1] = {71, 103};
  write_batch_file(t.path / "b.json", batches);
  CHECK(read_batch_file(t.path / "b.json") == batches);
  t.write("bad.json", R"([{"batch_id":0,"id":0,"age_group":"25-37","sex":"F","chronotype":"bear",)"
                      R"("avg_mood":5,"base_overall_accuracy":1.5,"base_label_accuracy":[0.5],)"
                      R"("history":[{"correct":1,"total":2}]}])");
  CHECK_THROWS_AS(read_batch_file(t.path / "bad.json"), DataError);
}

namespace {

ExperimentResult small_result(TestMode mode, std::uint64_t seed, int n) {
  ExperimentResult r;
  r.mode = mode;
  r.seed = seed;
  r.config_hash = "abc";
  for (int i = 0; i < n; ++i) {
    IterationRecord rec;
    rec.iteration = i;
    rec.instance = static_cast<std::size_t>(7 * i);
    rec.uncertainty = 1.0 / (i + 3.0);
    rec.annotator_id = i % 4;
    rec.given_label = i % 3;
    rec.true_label = (i / 2) % 3;
    rec.correct = rec.given_label == rec.true_label;
    rec.accuracy = rec.f1 = i % 10 == 9 ? 0.1 + 1.0 / (i + 7.0) : std::nan("");
    r.records.push_back(rec);
    r.ledger.record(rec.annotator_id, 0, 0);
  }
  r.finalize_metrics();
  r.wall_seconds = 0.25;
  r.cpu_seconds = 0.125;
  return r;
}

}  // namespace

TEST_CASE("export layout and run round trip") {
  TempDir t;
  std::map<RunKey, ExperimentResult> results;
  results[{0, 1, TestMode::Test1_AccuracyOnly}] = small_result(TestMode::Test1_AccuracyOnly, 1, 1224);
  results[{0, 1, TestMode::Test3_AccuracyMoodFatigue}] =
      small_result(TestMode::Test3_AccuracyMoodFatigue, 1, 1200);
  ManifestInfo info;
  info.config_hash = "abc";
  info.class_names = {"a", "b", "c"};
  export_results(results, t.path, info);

  const auto dir = run_dir(t.path, {0, 1, TestMode::Test1_AccuracyOnly});
  const auto csv = slurp(dir / "iterations.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1225);
  CHECK(csv.rfind("iter,instance,uncertainty,annotator_id,given_label,true_label,correct,accuracy,f1\n", 0) == 0);

  const auto back = read_run_dir(dir);
  const auto& orig = results.begin()->second;
  REQUIRE(back.records.size() == orig.records.size());
  for (std::size_t i = 0; i < orig.records.size(); ++i) {
    CHECK(back.records[i].uncertainty == orig.records[i].uncertainty);
    CHECK(back.records[i].instance == orig.records[i].instance);
    CHECK(back.records[i].evaluated() == orig.records[i].evaluated());
  }
  CHECK(back.ledger.entries() == orig.ledger.entries());
  CHECK(find_run_dirs(t.path).size() == 2);

  const auto summary = read_summary(t.path / "summary.json");
  const auto expected = aggregate(results);
  REQUIRE(summary.modes.size() == 2);
  CHECK(summary.config_hash == "abc");
  for (std::size_t m = 0; m < 2; ++m) {
    CHECK(summary.modes[m].mode == expected.modes[m].mode);
    CHECK(summary.modes[m].correct_rate == expected.modes[m].correct_rate);
    CHECK(summary.modes[m].final_accuracy == expected.modes[m].final_accuracy);
    CHECK(summary.modes[m].mean_uncertainty == expected.modes[m].mean_uncertainty);
    CHECK(summary.modes[m].uncertainty.value == expected.modes[m].uncertainty.value);
    CHECK(summary.modes[m].accuracy.value == expected.modes[m].accuracy.value);
  }
  const auto doc = nlohmann::json::parse(slurp(t.path / "summary.json"));
  CHECK(doc.at("modes").contains("test1"));
  CHECK(doc.at("modes").contains("test3"));

  const auto manifest = nlohmann::json::parse(slurp(t.path / "manifest.json"));
  CHECK(manifest.at("config_hash") == "abc");
  CHECK(manifest.at("label_mapping") == nlohmann::json::array({"a", "b", "c"}));
  bool listed = false;
  for (const auto& f : manifest.at("files")) {
    CHECK(f.at("sha256") == sha256_file(t.path / f.at("path").get<std::string>()));
    listed |= f.at("path") == "summary.json";
  }
  CHECK(listed);
}

TEST_CASE("moving average") {
  const std::vector<double> constant(40, 2.5);
  CHECK(moving_average(constant, 25) == constant);
  const std::vector<double> ramp{0, 1, 2, 3, 4, 5, 6};
  const auto s = moving_average(ramp, 3);
  CHECK(s == std::vector<double>{0.5, 1, 2, 3, 4, 5, 5.5});
  const auto w5 = moving_average(ramp, 5);
  CHECK(w5[0] == doctest::Approx(1.0));        // mean of 0..2
  CHECK(w5[1] == doctest::Approx(1.5));        // mean of 0..3
  CHECK(w5[3] == doctest::Approx(3.0));
  CHECK(w5[6] == doctest::Approx(5.0));        // mean of 4..6
  const auto w4 = moving_average(ramp, 4);
  CHECK(w4[3] == doctest::Approx(3.5));        // left 1, right 2: mean of 2..5
  CHECK(moving_average(ramp, 1) == ramp);
  CHECK_THROWS(moving_average(ramp, 0));
}

TEST_CASE("plot data has one row per mode and iteration") {
  TempDir t;
  std::map<RunKey, ExperimentResult> results;
  results[{0, 1, TestMode::Test1_AccuracyOnly}] = small_result(TestMode::Test1_AccuracyOnly, 1, 50);
  results[{0, 1, TestMode::Test2_AccuracyMood}] = small_result(TestMode::Test2_AccuracyMood, 1, 50);
  emit_plot_data(aggregate(results), t.path, 25);
  for (const char* name : {"accuracy.csv", "f1.csv", "uncertainty.csv"}) {
    std::ifstream in(t.path / name);
    std::string line;
    std::getline(in, line);
    CHECK(line == "mode,iter,raw,smoothed");
    std::map<std::pair<std::string, std::string>, int> seen;
    while (std::getline(in, line)) {
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      seen[{line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1)}]++;
    }
    for (const auto& [k, n] : seen) CHECK(n == 1);
    const std::size_t per_mode = std::string(name) == "uncertainty.csv" ? 50 : 5;
    CHECK(seen.size() == 2 * per_mode);
  }
}
