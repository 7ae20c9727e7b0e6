#include "annotsim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "annotsim/errors.hpp"
#include "annotsim/stratify.hpp"

namespace annotsim {

std::pair<SimClock, ClockEvents> advance_clock(SimClock clock, const SimParams& params) {
  ClockEvents events;
  clock.annotations_in_period += 1;
  if (clock.annotations_in_period >= params.period_length) {
    events.period_end = true;
    clock.annotations_in_period = 0;
    clock.period += 1;
    if (clock.period >= params.periods_per_day) {
      events.day_end = true;
      clock.period = 0;
      clock.day += 1;
    }
  }
  return {clock, events};
}

namespace {

std::vector<std::size_t> difference(std::span<const std::size_t> all,
                                    const std::vector<std::size_t>& taken) {
  std::vector<std::size_t> sorted_all(all.begin(), all.end());
  std::sort(sorted_all.begin(), sorted_all.end());
  std::vector<std::size_t> rest;
  std::set_difference(sorted_all.begin(), sorted_all.end(), taken.begin(), taken.end(),
                      std::back_inserter(rest));
  return rest;
}

double cpu_now() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

}  // namespace

SeedSplit build_seed_set(const Dataset& data, std::span<const std::size_t> rows, Rng& rng,
                         int min_size, int per_class) {
  if (data.num_classes < 2) throw DataError("seed set needs at least two classes");
  const auto groups = rows_by_class(data, rows);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].empty()) {
      throw DataError("class " + std::to_string(k) + " has no rows available for the seed set");
    }
  }
  const auto size = static_cast<std::size_t>(
      std::max(min_size, per_class * data.num_classes));
  if (rows.size() <= size) throw DataError("not enough rows for a seed set and a pool");

  SeedSplit split;
  split.seed = draw_stratified(groups, allocate_quota(groups, size, static_cast<std::size_t>(per_class)),
                               rng);
  split.pool = difference(rows, split.seed);
  return split;
}

SeedSplit build_seed_set(const Dataset& data, Rng& rng, int min_size, int per_class) {
  std::vector<std::size_t> rows(data.n_rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return build_seed_set(data, rows, rng, min_size, per_class);
}

void ExperimentConfig::validate() const {
  sim.validate();
  forest.validate();
  if (max_annotations < 1) throw ConfigError("max_annotations must be >= 1");
  if (!(stop_accuracy >= 0.0 && stop_accuracy <= 1.0)) {
    throw ConfigError("stop_accuracy must lie in [0, 1]");
  }
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (seed_set_min < 1 || seed_set_per_class < 1) throw ConfigError("seed set sizes must be >= 1");
  if (selector.warmup_queries < 2) throw ConfigError("uncertainty_warmup must be >= 2");
  if (eval_holdout && !(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction must lie in (0, 1)");
  }
}

bool IterationRecord::evaluated() const { return !std::isnan(accuracy); }

void ExperimentResult::finalize_metrics() {
  if (records.empty()) {
    correct_rate = final_accuracy = final_f1 = mean_uncertainty = 0.0;
    return;
  }
  double hits = 0.0, u = 0.0;
  for (const auto& r : records) {
    hits += r.correct ? 1.0 : 0.0;
    u += r.uncertainty;
  }
  const auto n = static_cast<double>(records.size());
  correct_rate = hits / n;
  mean_uncertainty = u / n;
  final_accuracy = final_f1 = std::numeric_limits<double>::quiet_NaN();
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (it->evaluated()) {
      final_accuracy = it->accuracy;
      final_f1 = it->f1;
      break;
    }
  }
}

ExperimentResult run_experiment(std::shared_ptr<const Dataset> data,
                                std::span<const Annotator> batch, const ExperimentConfig& config,
                                TestMode mode, std::uint64_t seed, int batch_id) {
  config.validate();
  data->validate();
  if (batch.empty()) throw DataError("annotator batch is empty");
  for (const auto& a : batch) {
    if (a.num_labels() != static_cast<std::size_t>(data->num_classes) ||
        a.history.size() != a.num_labels()) {
      throw DataError("annotator " + std::to_string(a.id) + " has " +
                      std::to_string(a.num_labels()) + " label accuracies but the dataset has " +
                      std::to_string(data->num_classes) + " classes");
    }
  }

  const auto wall_start = std::chrono::steady_clock::now();
  const double cpu_start = cpu_now();
  const SimParams& params = config.sim;

  std::vector<std::size_t> all_rows(data->n_rows);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  std::vector<std::size_t> eval_rows = all_rows;
  std::vector<std::size_t> usable = all_rows;
  if (config.eval_holdout) {
    Rng hrng = keyed_rng(seed, Stream::SeedSet, {1});
    const auto groups = rows_by_class(*data, all_rows);
    const auto quota = static_cast<std::size_t>(
        std::llround(config.holdout_fraction * static_cast<double>(data->n_rows)));
    eval_rows = draw_stratified(groups, allocate_quota(groups, quota, 1), hrng);
    usable = difference(all_rows, eval_rows);
  }
  Rng srng = keyed_rng(seed, Stream::SeedSet, {0});
  SeedSplit split =
      build_seed_set(*data, usable, srng, config.seed_set_min, config.seed_set_per_class);

  std::vector<std::size_t> train_rows = split.seed;
  std::vector<int> train_labels;
  for (auto r : train_rows) train_labels.push_back(data->labels[r]);
  std::vector<std::size_t> pool = std::move(split.pool);

  std::vector<Annotator> annotators(batch.begin(), batch.end());
  std::unordered_map<int, std::size_t> index_of;
  for (std::size_t i = 0; i < annotators.size(); ++i) {
    if (!index_of.emplace(annotators[i].id, i).second) {
      throw DataError("duplicate annotator id " + std::to_string(annotators[i].id));
    }
  }
  auto draw_moods = [&](int day) {
    std::vector<MoodDay> moods;
    moods.reserve(annotators.size());
    for (const auto& a : annotators) {
      Rng mrng = keyed_rng(seed, Stream::Mood,
                           {static_cast<std::uint64_t>(a.id), static_cast<std::uint64_t>(day)});
      moods.push_back(mood_trajectory(a, mrng));
    }
    return moods;
  };

  ExperimentResult result;
  result.mode = mode;
  result.batch_id = batch_id;
  result.seed = seed;
  result.seed_size = train_rows.size();

  SimClock clock;
  std::vector<MoodDay> moods = draw_moods(clock.day);
  std::vector<std::vector<Observation>> day_obs(annotators.size());
  UncertaintyStats stats;
  auto forest_seed = [seed](int iteration) {
    return keyed_rng(seed, Stream::Forest, {static_cast<std::uint64_t>(iteration)})();
  };

  RandomForest model(data, config.forest);
  model.fit(train_rows, train_labels, forest_seed(0));

  std::vector<AnnotatorView> views(annotators.size());
  for (int it = 0; it < config.max_annotations && !pool.empty(); ++it) {
    const QueryContext ctx = select_query(model, pool);

    for (std::size_t i = 0; i < annotators.size(); ++i) {
      const auto& a = annotators[i];
      const int mood = moods[i].moods[static_cast<std::size_t>(clock.period)];
      const auto window = fatigue_window_count(result.ledger, a.id, clock.day, clock.period);
      views[i] = mode == TestMode::Test4_Oracle ? ground_truth_view(a, mood, window)
                                                : belief_view(a, mood, window);
    }
    const auto ranking = mode == TestMode::Test4_Oracle
                             ? recommend_optimal(ctx, views, params)
                             : recommend_rs(ctx, views, mode, params, stats, config.selector);
    const std::size_t chosen = index_of.at(ranking.front().annotator_id);
    const Annotator& annotator = annotators[chosen];

    const int true_label = data->labels[ctx.instance_index];
    const int mood = moods[chosen].moods[static_cast<std::size_t>(clock.period)];
    const int level = fatigue_level(views[chosen].fatigue_count, params);
    Rng lrng = keyed_rng(seed, Stream::Label, {static_cast<std::uint64_t>(it)});
    const LabelOutcome outcome = simulate_label(annotator, true_label, mood, level, params, lrng);

    IterationRecord rec;
    rec.iteration = it;
    rec.instance = ctx.instance_index;
    rec.uncertainty = ctx.uncertainty;
    rec.annotator_id = annotator.id;
    rec.given_label = outcome.given_label;
    rec.true_label = true_label;
    rec.correct = outcome.correct;
    rec.accuracy = rec.f1 = std::numeric_limits<double>::quiet_NaN();

    train_rows.push_back(ctx.instance_index);
    train_labels.push_back(outcome.given_label);
    pool.erase(std::lower_bound(pool.begin(), pool.end(), ctx.instance_index));
    result.ledger.record(annotator.id, clock.day, clock.period);
    stats = update_uncertainty_stats(stats, ctx.uncertainty);
    day_obs[chosen].push_back({true_label, outcome.correct});

    model.fit(train_rows, train_labels, forest_seed(it + 1));
    bool stop = false;
    const bool last = it + 1 == config.max_annotations || pool.empty();
    if ((it + 1) % config.eval_every == 0 || last) {
      const Evaluation ev = evaluate(model, *data, eval_rows);
      rec.accuracy = ev.accuracy;
      rec.f1 = ev.macro_f1;
      stop = ev.accuracy >= config.stop_accuracy;
    }
    result.records.push_back(rec);

    const auto [next, events] = advance_clock(clock, params);
    clock = next;
    if (events.day_end) {
      for (std::size_t i = 0; i < annotators.size(); ++i) {
        annotators[i] = update_history(std::move(annotators[i]), day_obs[i]);
        day_obs[i].clear();
      }
      moods = draw_moods(clock.day);
    }
    if (stop) break;
  }

  result.finalize_metrics();
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  result.cpu_seconds = cpu_now() - cpu_start;
  return result;
}

std::map<RunKey, ExperimentResult> run_grid(
    std::shared_ptr<const Dataset> data, const std::map<int, std::vector<Annotator>>& batches,
    const ExperimentConfig& config, std::span<const TestMode> modes,
    const std::function<void(const RunKey&, const ExperimentResult&)>& on_done) {
  std::map<RunKey, ExperimentResult> results;
  for (const auto& [batch_id, annotators] : batches) {
    for (int r = 0; r < config.replications; ++r) {
      const std::uint64_t seed = config.rng_seed + static_cast<std::uint64_t>(r);
      for (auto mode : modes) {
        const RunKey key{batch_id, seed, mode};
        auto result = run_experiment(data, annotators, config, mode, seed, batch_id);
        if (on_done) on_done(key, result);
        results.emplace(key, std::move(result));
      }
    }
  }
  return results;
}

const ModeSummary* Summary::find(TestMode mode) const {
  for (const auto& m : modes) {
    if (m.mode == mode) return &m;
  }
  return nullptr;
}

Summary aggregate(const std::map<RunKey, ExperimentResult>& results) {
  if (results.empty()) throw ConfigError("nothing to aggregate");
  Summary summary;
  summary.config_hash = results.begin()->second.config_hash;
  for (const auto& [key, r] : results) {
    if (r.config_hash != summary.config_hash) {
      throw ConfigError("cannot aggregate runs produced by different configurations");
    }
  }

  for (auto mode : kAllModes) {
    std::vector<const ExperimentResult*> runs;
    for (const auto& [key, r] : results) {
      if (key.mode == mode) runs.push_back(&r);
    }
    if (runs.empty()) continue;

    ModeSummary ms;
    ms.mode = mode;
    ms.n_runs = static_cast<int>(runs.size());
    const auto n = static_cast<double>(runs.size());
    std::size_t shortest = std::numeric_limits<std::size_t>::max();
    for (const auto* r : runs) {
      ms.correct_rate += r->correct_rate;
      ms.final_accuracy += r->final_accuracy;
      ms.final_f1 += r->final_f1;
      ms.mean_uncertainty += r->mean_uncertainty;
      ms.wall_seconds += r->wall_seconds;
      ms.cpu_seconds += r->cpu_seconds;
      shortest = std::min(shortest, r->records.size());
    }
    for (double* v : {&ms.correct_rate, &ms.final_accuracy, &ms.final_f1, &ms.mean_uncertainty,
                      &ms.wall_seconds, &ms.cpu_seconds}) {
      *v /= n;
    }
    for (std::size_t i = 0; i < shortest; ++i) {
      double u = 0.0, acc = 0.0, f1 = 0.0;
      bool all_evaluated = true;
      for (const auto* r : runs) {
        const auto& rec = r->records[i];
        u += rec.uncertainty;
        all_evaluated = all_evaluated && rec.evaluated();
        acc += rec.accuracy;
        f1 += rec.f1;
      }
      const int iter = static_cast<int>(i);
      ms.uncertainty.iteration.push_back(iter);
      ms.uncertainty.value.push_back(u / n);
      if (all_evaluated) {
        ms.accuracy.iteration.push_back(iter);
        ms.accuracy.value.push_back(acc / n);
        ms.f1.iteration.push_back(iter);
        ms.f1.value.push_back(f1 / n);
      }
    }
    summary.modes.push_back(std::move(ms));
  }
  return summary;
}

}  // namespace annotsim
