#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <tuple>
#include <utility>

#include "annotsim/population.hpp"
#include "annotsim/rng.hpp"

namespace annotsim {

struct SimParams {
  double mood_unit_effect = 0.06;
  double fatigue_penalty = 0.02;
  int fatigue_start = 50;
  int fatigue_step = 20;
  int period_length = 204;
  int periods_per_day = 3;

  void validate() const;
};

inline constexpr int kMinMood = 1;
inline constexpr int kMaxMood = 10;

// Mood per period for one simulated day.
struct MoodDay {
  std::array<int, 3> moods{5, 5, 5};
  bool operator==(const MoodDay&) const = default;
};

// Annotation counts per (annotator, day, period).
class FatigueLedger {
 public:
  void record(int annotator_id, int day, int period, std::int64_t n = 1);
  std::int64_t count(int annotator_id, int day, int period) const;
  std::int64_t total() const;
  std::int64_t total_for(int annotator_id) const;

  const std::map<std::tuple<int, int, int>, std::int64_t>& entries() const { return counts_; }

 private:
  std::map<std::tuple<int, int, int>, std::int64_t> counts_;
};

int fatigue_level(std::int64_t n, const SimParams& params);

// Annotations in the current period plus the previous period of the same day.
std::int64_t fatigue_window_count(const FatigueLedger& ledger, int annotator_id, int day,
                                  int period);

// Trajectory from an explicit first-period mood and the two period jitters
// (each 0 or 1). Results are clamped to [1, 10].
MoodDay mood_trajectory_from(Chronotype chronotype, int first_mood, int jitter2, int jitter3);
// Upper bound of the first-period draw: avg_mood, one higher for lions.
int first_mood_ceiling(const Annotator& annotator);
MoodDay mood_trajectory(const Annotator& annotator, Rng& rng);

// Multiplicative mood adjustment followed by subtractive fatigue penalty,
// clamped to [0, 1].
double effective_accuracy(double base, int mood, int avg_mood, int fatigue_lvl,
                          const SimParams& params);

struct LabelOutcome {
  int given_label = 0;
  bool correct = false;
};

LabelOutcome simulate_label_with(double p_correct, int true_label, int num_labels, Rng& rng);
LabelOutcome simulate_label(const Annotator& annotator, int true_label, int mood, int fatigue_lvl,
                            const SimParams& params, Rng& rng);

struct Observation {
  int label = 0;
  bool correct = false;
};

// Folds one day of (true label, correct) observations into the history counts.
// Ground-truth base accuracies are left untouched.
Annotator update_history(Annotator annotator, std::span<const Observation> day_observations);

}  // namespace annotsim
