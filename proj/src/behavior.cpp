#include "annotsim/behavior.hpp"

#include <algorithm>

#include "annotsim/errors.hpp"

namespace annotsim {

void SimParams::validate() const {
  if (!(mood_unit_effect > 0.0)) throw ConfigError("mood_unit_effect must be positive");
  if (!(fatigue_penalty > 0.0)) throw ConfigError("fatigue_penalty must be positive");
  if (fatigue_start < 1) throw ConfigError("fatigue_start must be positive");
  if (fatigue_step < 1) throw ConfigError("fatigue_step must be >= 1");
  if (period_length < 1) throw ConfigError("period_length must be positive");
  if (periods_per_day != 3) throw ConfigError("periods_per_day must be 3");
}

void FatigueLedger::record(int annotator_id, int day, int period, std::int64_t n) {
  counts_[{annotator_id, day, period}] += n;
}

std::int64_t FatigueLedger::count(int annotator_id, int day, int period) const {
  auto it = counts_.find({annotator_id, day, period});
  return it == counts_.end() ? 0 : it->second;
}

std::int64_t FatigueLedger::total() const {
  std::int64_t s = 0;
  for (const auto& [key, n] : counts_) s += n;
  return s;
}

std::int64_t FatigueLedger::total_for(int annotator_id) const {
  std::int64_t s = 0;
  for (const auto& [key, n] : counts_) {
    if (std::get<0>(key) == annotator_id) s += n;
  }
  return s;
}

int fatigue_level(std::int64_t n, const SimParams& params) {
  if (n < params.fatigue_start) return 0;
  return 1 + static_cast<int>((n - params.fatigue_start) / params.fatigue_step);
}

std::int64_t fatigue_window_count(const FatigueLedger& ledger, int annotator_id, int day,
                                  int period) {
  std::int64_t n = ledger.count(annotator_id, day, period);
  if (period > 0) n += ledger.count(annotator_id, day, period - 1);
  return n;
}

MoodDay mood_trajectory_from(Chronotype chronotype, int first_mood, int jitter2, int jitter3) {
  const int m1 = first_mood;
  MoodDay day;
  switch (chronotype) {
    case Chronotype::Lion: day.moods = {m1, m1 + jitter2, m1 - 1 - jitter3}; break;
    case Chronotype::Dolphin: day.moods = {m1, m1 + jitter2, m1 + 1 + jitter3}; break;
    case Chronotype::Bear: day.moods = {m1, m1 + 1 + jitter2, m1 + 1}; break;
    case Chronotype::Wolf: day.moods = {m1, m1 + 1, m1 + 1 + jitter3}; break;
  }
  for (auto& m : day.moods) m = std::clamp(m, kMinMood, kMaxMood);
  return day;
}

int first_mood_ceiling(const Annotator& annotator) {
  const int bonus = annotator.chronotype == Chronotype::Lion ? 1 : 0;
  return std::clamp(annotator.avg_mood + bonus, kMinMood, kMaxMood);
}

MoodDay mood_trajectory(const Annotator& annotator, Rng& rng) {
  const int m1 = std::uniform_int_distribution<int>(kMinMood, first_mood_ceiling(annotator))(rng);
  std::bernoulli_distribution coin(0.5);
  const int j2 = coin(rng) ? 1 : 0;
  const int j3 = coin(rng) ? 1 : 0;
  return mood_trajectory_from(annotator.chronotype, m1, j2, j3);
}

double effective_accuracy(double base, int mood, int avg_mood, int fatigue_lvl,
                          const SimParams& params) {
  double acc = base * (1.0 + params.mood_unit_effect * static_cast<double>(mood - avg_mood));
  acc -= params.fatigue_penalty * static_cast<double>(fatigue_lvl);
  return std::clamp(acc, 0.0, 1.0);
}

LabelOutcome simulate_label_with(double p_correct, int true_label, int num_labels, Rng& rng) {
  if (num_labels < 2) throw DataError("label simulation needs at least two labels");
  // Both draws are always taken so that the stream position does not depend
  // on the outcome.
  const double u = uniform01(rng);
  const int offset = std::uniform_int_distribution<int>(1, num_labels - 1)(rng);
  if (u < p_correct) return {true_label, true};
  return {(true_label + offset) % num_labels, false};
}

LabelOutcome simulate_label(const Annotator& annotator, int true_label, int mood, int fatigue_lvl,
                            const SimParams& params, Rng& rng) {
  const double p = effective_accuracy(annotator.base_label_accuracy.at(true_label), mood,
                                      annotator.avg_mood, fatigue_lvl, params);
  return simulate_label_with(p, true_label, static_cast<int>(annotator.num_labels()), rng);
}

Annotator update_history(Annotator annotator, std::span<const Observation> day_observations) {
  for (const auto& obs : day_observations) {
    auto& h = annotator.history.at(static_cast<std::size_t>(obs.label));
    h.total += 1;
    h.correct += obs.correct ? 1 : 0;
  }
  return annotator;
}

}  // namespace annotsim
