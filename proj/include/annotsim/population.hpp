#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "annotsim/rng.hpp"

namespace annotsim {

enum class Chronotype { Dolphin, Lion, Bear, Wolf };
enum class AgeGroup { G25_37, G38_45, G46_55, G56_65 };
enum class Sex { F, M };

std::string_view to_string(Chronotype c);
std::string_view to_string(AgeGroup g);
std::string_view to_string(Sex s);
Chronotype chronotype_from_string(std::string_view s);
AgeGroup age_group_from_string(std::string_view s);
Sex sex_from_string(std::string_view s);

// Correct/total counts of past annotations for one label.
struct LabelHistory {
  std::int64_t correct = 0;
  std::int64_t total = 0;

  double estimate() const {
    return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  }
  bool operator==(const LabelHistory&) const = default;
};

// A simulated annotator. The base_* fields are the ground truth used by the
// labeling simulation; history is what a recommender is allowed to see.
struct Annotator {
  int id = 0;
  AgeGroup age_group = AgeGroup::G25_37;
  Sex sex = Sex::F;
  Chronotype chronotype = Chronotype::Bear;
  int avg_mood = 5;
  double base_overall_accuracy = 0.75;
  std::vector<double> base_label_accuracy;
  std::vector<LabelHistory> history;

  std::size_t num_labels() const { return base_label_accuracy.size(); }
  double label_estimate(std::size_t label) const { return history.at(label).estimate(); }
  // Count-weighted mean over labels, i.e. pooled correct / pooled total.
  double overall_estimate() const;

  bool operator==(const Annotator&) const = default;
};

struct BatchConfig {
  int batch_id = 0;
  std::array<double, 4> age_group_probs{0.25, 0.25, 0.25, 0.25};
  std::array<double, 2> sex_probs{0.5, 0.5};
  int n_annotators = 30;
  std::uint64_t rng_seed = 0;
  int num_labels = 2;

  // Throws ConfigError on probability vectors that do not sum to 1 or on
  // non-positive sizes.
  void validate() const;
};

// Generation constants for the synthetic population.
inline constexpr double kOverallAccuracyMean = 0.75;
inline constexpr double kOverallAccuracySd = 0.07;
inline constexpr double kLabelAccuracySd = 0.06;
inline constexpr int kPseudoHistorySize = 100;
inline constexpr int kMinAvgMood = 3;
inline constexpr int kMaxAvgMood = 7;

// Chronotype probabilities per age group, in Chronotype enum order.
std::array<double, 4> chronotype_probs(AgeGroup group);

// Categorical draw from chronotype_probs(group) at quantile q in [0, 1).
// Categories are laid out in the order Bear, Dolphin, Wolf, Lion.
Chronotype chronotype_at_quantile(AgeGroup group, double q);
Chronotype sample_chronotype(AgeGroup group, Rng& rng);

// Deterministic part of annotator generation: given the drawn overall and
// per-label accuracies, clamp and seed the pseudo-history.
Annotator make_annotator(int id, AgeGroup group, Sex sex, Chronotype chronotype, int avg_mood,
                         double overall_draw, const std::vector<double>& label_draws);

Annotator generate_annotator(int id, const BatchConfig& config, Rng& rng);
std::vector<Annotator> generate_batch(const BatchConfig& config);

}  // namespace annotsim
