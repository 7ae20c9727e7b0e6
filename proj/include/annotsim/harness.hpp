#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "annotsim/behavior.hpp"
#include "annotsim/forest.hpp"
#include "annotsim/learner.hpp"
#include "annotsim/population.hpp"
#include "annotsim/rng.hpp"
#include "annotsim/selector.hpp"

namespace annotsim {

struct SimClock {
  int day = 0;
  int period = 0;
  int annotations_in_period = 0;
  bool operator==(const SimClock&) const = default;
};

struct ClockEvents {
  bool period_end = false;
  bool day_end = false;
  bool operator==(const ClockEvents&) const = default;
};

// Counts one annotation and rolls the period/day over when a period fills up.
std::pair<SimClock, ClockEvents> advance_clock(SimClock clock, const SimParams& params);

struct SeedSplit {
  std::vector<std::size_t> seed;
  std::vector<std::size_t> pool;  // ascending
};

// Stratified labeled seed set of max(min_size, per_class * C) rows drawn
// from `rows`; everything else becomes the pool. Throws DataError when a
// class is absent or there are too few rows.
SeedSplit build_seed_set(const Dataset& data, std::span<const std::size_t> rows, Rng& rng,
                         int min_size = 10, int per_class = 2);
SeedSplit build_seed_set(const Dataset& data, Rng& rng, int min_size = 10, int per_class = 2);

struct ExperimentConfig {
  SimParams sim;
  ForestParams forest;
  SelectorParams selector;
  int seed_set_min = 10;
  int seed_set_per_class = 2;
  int max_annotations = 1224;
  double stop_accuracy = 0.99;
  int eval_every = 10;
  std::uint64_t rng_seed = 1;
  int replications = 1;
  // Evaluate on a stratified held-out split instead of the full dataset.
  bool eval_holdout = false;
  double holdout_fraction = 0.2;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  std::size_t instance = 0;
  double uncertainty = 0.0;
  int annotator_id = 0;
  int given_label = 0;
  int true_label = 0;
  bool correct = false;
  // NaN on iterations without an evaluation.
  double accuracy = 0.0;
  double f1 = 0.0;

  bool evaluated() const;
};

struct ExperimentResult {
  TestMode mode = TestMode::Test1_AccuracyOnly;
  int batch_id = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t seed_size = 0;
  std::vector<IterationRecord> records;
  double correct_rate = 0.0;
  double final_accuracy = 0.0;
  double final_f1 = 0.0;
  double mean_uncertainty = 0.0;
  double wall_seconds = 0.0;
  double cpu_seconds = 0.0;
  FatigueLedger ledger;

  // Recomputes the scalar metrics from the records.
  void finalize_metrics();
};

// One active-learning run of `mode` with the given annotator batch. Every
// random draw is keyed by (seed, purpose, annotator/day or iteration), so two
// modes run with the same seed see identical mood and labeling draws.
ExperimentResult run_experiment(std::shared_ptr<const Dataset> data,
                                std::span<const Annotator> batch, const ExperimentConfig& config,
                                TestMode mode, std::uint64_t seed, int batch_id = 0);

struct RunKey {
  int batch_id = 0;
  std::uint64_t seed = 0;
  TestMode mode = TestMode::Test1_AccuracyOnly;
  auto operator<=>(const RunKey&) const = default;
};

struct Curve {
  std::vector<int> iteration;
  std::vector<double> value;
};

struct ModeSummary {
  TestMode mode = TestMode::Test1_AccuracyOnly;
  int n_runs = 0;
  double correct_rate = 0.0;
  double final_accuracy = 0.0;
  double final_f1 = 0.0;
  double mean_uncertainty = 0.0;
  double wall_seconds = 0.0;
  double cpu_seconds = 0.0;
  Curve uncertainty;
  Curve accuracy;
  Curve f1;
};

struct Summary {
  std::string config_hash;
  std::vector<ModeSummary> modes;  // in TestMode order

  const ModeSummary* find(TestMode mode) const;
};

// Runs every (batch, replication seed, mode) combination sequentially.
// Replication r uses seed config.rng_seed + r; `on_done` fires after each run.
std::map<RunKey, ExperimentResult> run_grid(
    std::shared_ptr<const Dataset> data, const std::map<int, std::vector<Annotator>>& batches,
    const ExperimentConfig& config, std::span<const TestMode> modes,
    const std::function<void(const RunKey&, const ExperimentResult&)>& on_done = {});

// Per-mode means over batches and seeds plus mean curves aligned by
// iteration index and truncated to the shortest run. Throws ConfigError on
// empty input or results carrying different config hashes.
Summary aggregate(const std::map<RunKey, ExperimentResult>& results);

}  // namespace annotsim
