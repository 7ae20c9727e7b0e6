#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "annotsim/behavior.hpp"
#include "annotsim/learner.hpp"
#include "annotsim/population.hpp"

namespace annotsim {

enum class TestMode {
  Test1_AccuracyOnly,
  Test2_AccuracyMood,
  Test3_AccuracyMoodFatigue,
  Test4_Oracle,
};

std::string_view to_string(TestMode mode);  // "test1".."test4"
TestMode test_mode_from_string(std::string_view s);
std::vector<TestMode> parse_modes(std::string_view csv);
inline constexpr std::array<TestMode, 4> kAllModes{
    TestMode::Test1_AccuracyOnly, TestMode::Test2_AccuracyMood,
    TestMode::Test3_AccuracyMoodFatigue, TestMode::Test4_Oracle};

// Welford running mean/variance over queried-instance uncertainties.
struct UncertaintyStats {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  double variance() const { return count >= 2 ? m2 / static_cast<double>(count) : 0.0; }
  double threshold(double sd_multiplier = 2.0) const;
};

UncertaintyStats update_uncertainty_stats(UncertaintyStats stats, double u);

// What a recommender knows about one annotator at query time.
struct AnnotatorView {
  int annotator_id = 0;
  std::vector<double> label_accuracy;
  double overall_accuracy = 0.0;
  int current_period_mood = 5;
  int avg_mood = 5;
  std::int64_t fatigue_count = 0;
};

// View built from the history estimates (Tests 1-3).
AnnotatorView belief_view(const Annotator& a, int mood, std::int64_t fatigue_count);
// View built from the ground-truth labeling model (Test 4).
AnnotatorView ground_truth_view(const Annotator& a, int mood, std::int64_t fatigue_count);

struct ScoredAnnotator {
  int annotator_id = 0;
  double score = 0.0;
  bool operator==(const ScoredAnnotator&) const = default;
};

// Sorts descending by score, ties by lowest annotator id.
void sort_ranking(std::vector<ScoredAnnotator>& ranking);

struct SelectorParams {
  // Queries that must be recorded before the high-uncertainty branch opens.
  int warmup_queries = 10;
  double sd_multiplier = 2.0;
};

double predicted_accuracy(const AnnotatorView& view, TestMode mode, const SimParams& params,
                          std::optional<int> label = std::nullopt);

struct BranchWeights {
  double overall = 0.5;
  double labels = 0.5;
  bool operator==(const BranchWeights&) const = default;
};

BranchWeights weight_branch(double u, const UncertaintyStats& stats, std::size_t t_size,
                            int num_labels, const SelectorParams& sp = {});

std::vector<ScoredAnnotator> recommend_rs(const QueryContext& ctx,
                                          std::span<const AnnotatorView> views, TestMode mode,
                                          const SimParams& params, const UncertaintyStats& stats,
                                          const SelectorParams& sp = {});

struct OptimalWeights {
  double highest = 0.5;
  double second = 0.0;
  double third = 0.0;
  double mean = 0.5;
};

// Branch of the optimization baseline for sorted, zero-padded label accuracies.
OptimalWeights optimal_weights(std::span<const double> sorted_label_acc, std::size_t t_size);
// Score from already adjusted label accuracies (any order; sorted and padded
// to three internally) and the adjusted mean accuracy.
double optimal_score(std::vector<double> label_acc, double mean_acc, std::size_t t_size);

std::vector<ScoredAnnotator> recommend_optimal(const QueryContext& ctx,
                                               std::span<const AnnotatorView> views,
                                               const SimParams& params);

}  // namespace annotsim
