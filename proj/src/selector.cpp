#include "annotsim/selector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "annotsim/errors.hpp"

namespace annotsim {

std::string_view to_string(TestMode mode) {
  switch (mode) {
    case TestMode::Test1_AccuracyOnly: return "test1";
    case TestMode::Test2_AccuracyMood: return "test2";
    case TestMode::Test3_AccuracyMoodFatigue: return "test3";
    case TestMode::Test4_Oracle: return "test4";
  }
  return "test1";
}

TestMode test_mode_from_string(std::string_view s) {
  for (auto m : kAllModes) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown test mode '" + std::string(s) + "'");
}

std::vector<TestMode> parse_modes(std::string_view csv) {
  std::vector<TestMode> modes;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto comma = csv.find(',', start);
    const auto token = csv.substr(start, comma == std::string_view::npos ? csv.npos : comma - start);
    if (!token.empty()) {
      const auto m = test_mode_from_string(token);
      if (std::find(modes.begin(), modes.end(), m) != modes.end()) {
        throw ConfigError("duplicate test mode '" + std::string(token) + "'");
      }
      modes.push_back(m);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (modes.empty()) throw ConfigError("no test modes given");
  return modes;
}

double UncertaintyStats::threshold(double sd_multiplier) const {
  return mean + sd_multiplier * std::sqrt(variance());
}

UncertaintyStats update_uncertainty_stats(UncertaintyStats stats, double u) {
  stats.count += 1;
  const double delta = u - stats.mean;
  stats.mean += delta / static_cast<double>(stats.count);
  stats.m2 += delta * (u - stats.mean);
  return stats;
}

AnnotatorView belief_view(const Annotator& a, int mood, std::int64_t fatigue_count) {
  AnnotatorView v;
  v.annotator_id = a.id;
  v.label_accuracy.reserve(a.history.size());
  for (const auto& h : a.history) v.label_accuracy.push_back(h.estimate());
  v.overall_accuracy = a.overall_estimate();
  v.current_period_mood = mood;
  v.avg_mood = a.avg_mood;
  v.fatigue_count = fatigue_count;
  return v;
}

AnnotatorView ground_truth_view(const Annotator& a, int mood, std::int64_t fatigue_count) {
  AnnotatorView v;
  v.annotator_id = a.id;
  v.label_accuracy = a.base_label_accuracy;
  v.overall_accuracy = a.base_overall_accuracy;
  v.current_period_mood = mood;
  v.avg_mood = a.avg_mood;
  v.fatigue_count = fatigue_count;
  return v;
}

void sort_ranking(std::vector<ScoredAnnotator>& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const ScoredAnnotator& a, const ScoredAnnotator& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.annotator_id < b.annotator_id;
  });
}

double predicted_accuracy(const AnnotatorView& view, TestMode mode, const SimParams& params,
                          std::optional<int> label) {
  if (mode == TestMode::Test4_Oracle) {
    throw std::invalid_argument("predicted_accuracy does not apply to the optimization baseline");
  }
  double acc = label ? view.label_accuracy.at(static_cast<std::size_t>(*label))
                     : view.overall_accuracy;
  if (mode == TestMode::Test1_AccuracyOnly) return acc;
  const int delta = view.current_period_mood - view.avg_mood;
  acc = std::clamp(acc * (1.0 + params.mood_unit_effect * static_cast<double>(delta)), 0.0, 1.0);
  if (mode == TestMode::Test2_AccuracyMood) return acc;
  const int level = fatigue_level(view.fatigue_count, params);
  return std::clamp(acc - params.fatigue_penalty * static_cast<double>(level), 0.0, 1.0);
}

BranchWeights weight_branch(double u, const UncertaintyStats& stats, std::size_t t_size,
                            int num_labels, const SelectorParams& sp) {
  if (stats.count >= sp.warmup_queries && u > stats.threshold(sp.sd_multiplier)) {
    return {0.8, 0.2};
  }
  if (static_cast<double>(t_size) > static_cast<double>(num_labels) / 2.0 - 1.0) {
    return {0.3, 0.7};
  }
  return {0.5, 0.5};
}

std::vector<ScoredAnnotator> recommend_rs(const QueryContext& ctx,
                                          std::span<const AnnotatorView> views, TestMode mode,
                                          const SimParams& params, const UncertaintyStats& stats,
                                          const SelectorParams& sp) {
  if (views.empty()) throw std::invalid_argument("recommend_rs needs at least one annotator");
  if (mode == TestMode::Test4_Oracle) {
    throw std::invalid_argument("recommend_rs does not handle the optimization baseline");
  }
  const auto& t = ctx.query_type_labels;
  const BranchWeights w = weight_branch(ctx.uncertainty, stats, t.size(), ctx.num_labels(), sp);

  std::vector<ScoredAnnotator> ranking;
  ranking.reserve(views.size());
  for (const auto& view : views) {
    const double ac = predicted_accuracy(view, mode, params);
    double score = 0.0;
    for (int label : t) {
      const double ac_i = predicted_accuracy(view, mode, params, label);
      score += (w.overall * ac + w.labels * ac_i) * ctx.probs[static_cast<std::size_t>(label)];
    }
    ranking.push_back({view.annotator_id, score});
  }
  sort_ranking(ranking);
  return ranking;
}

OptimalWeights optimal_weights(std::span<const double> a, std::size_t t_size) {
  constexpr double kGap = 0.04;
  if (t_size > 1 && a[0] - a[1] < kGap) {
    if (a[1] - a[2] >= kGap) return {0.3, 0.3, 0.0, 0.4};
    return {0.3, 0.2, 0.2, 0.3};
  }
  return {0.5, 0.0, 0.0, 0.5};
}

double optimal_score(std::vector<double> label_acc, double mean_acc, std::size_t t_size) {
  std::sort(label_acc.begin(), label_acc.end(), std::greater<>());
  label_acc.resize(3, 0.0);
  const OptimalWeights w = optimal_weights(label_acc, t_size);
  return w.highest * label_acc[0] + w.second * label_acc[1] + w.third * label_acc[2] +
         w.mean * mean_acc;
}

std::vector<ScoredAnnotator> recommend_optimal(const QueryContext& ctx,
                                               std::span<const AnnotatorView> views,
                                               const SimParams& params) {
  if (views.empty()) throw std::invalid_argument("recommend_optimal needs at least one annotator");
  const auto& t = ctx.query_type_labels;
  constexpr auto kFull = TestMode::Test3_AccuracyMoodFatigue;

  std::vector<ScoredAnnotator> ranking;
  ranking.reserve(views.size());
  std::vector<double> label_acc;
  for (const auto& view : views) {
    label_acc.clear();
    for (int label : t) label_acc.push_back(predicted_accuracy(view, kFull, params, label));
    const double mean_acc = predicted_accuracy(view, kFull, params);
    ranking.push_back({view.annotator_id, optimal_score(label_acc, mean_acc, t.size())});
  }
  sort_ranking(ranking);
  return ranking;
}

}  // namespace annotsim
