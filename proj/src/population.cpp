#include "annotsim/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "annotsim/errors.hpp"

namespace annotsim {

namespace {

constexpr std::array<Chronotype, 4> kDrawOrder{Chronotype::Bear, Chronotype::Dolphin,
                                               Chronotype::Wolf, Chronotype::Lion};

template <std::size_t N>
std::size_t categorical_at(const std::array<double, N>& probs, double q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += probs[i];
    if (q < acc) return i;
  }
  // q within rounding of 1.0: last category with non-zero mass.
  for (std::size_t i = N; i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return N - 1;
}

template <std::size_t N>
bool sums_to_one(const std::array<double, N>& probs) {
  double s = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) return false;
    s += p;
  }
  return std::abs(s - 1.0) <= 1e-9;
}

}  // namespace

std::string_view to_string(Chronotype c) {
  switch (c) {
    case Chronotype::Dolphin: return "dolphin";
    case Chronotype::Lion: return "lion";
    case Chronotype::Bear: return "bear";
    case Chronotype::Wolf: return "wolf";
  }
  return "bear";
}

std::string_view to_string(AgeGroup g) {
  switch (g) {
    case AgeGroup::G25_37: return "25-37";
    case AgeGroup::G38_45: return "38-45";
    case AgeGroup::G46_55: return "46-55";
    case AgeGroup::G56_65: return "56-65";
  }
  return "25-37";
}

std::string_view to_string(Sex s) { return s == Sex::F ? "F" : "M"; }

Chronotype chronotype_from_string(std::string_view s) {
  for (auto c : {Chronotype::Dolphin, Chronotype::Lion, Chronotype::Bear, Chronotype::Wolf}) {
    if (to_string(c) == s) return c;
  }
  throw DataError("unknown chronotype '" + std::string(s) + "'");
}

AgeGroup age_group_from_string(std::string_view s) {
  for (auto g : {AgeGroup::G25_37, AgeGroup::G38_45, AgeGroup::G46_55, AgeGroup::G56_65}) {
    if (to_string(g) == s) return g;
  }
  throw DataError("unknown age group '" + std::string(s) + "'");
}

Sex sex_from_string(std::string_view s) {
  if (s == "F") return Sex::F;
  if (s == "M") return Sex::M;
  throw DataError("unknown sex '" + std::string(s) + "'");
}

double Annotator::overall_estimate() const {
  std::int64_t correct = 0;
  std::int64_t total = 0;
  for (const auto& h : history) {
    correct += h.correct;
    total += h.total;
  }
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

void BatchConfig::validate() const {
  if (n_annotators < 1) throw ConfigError("n_annotators must be >= 1");
  if (num_labels < 2) throw ConfigError("num_labels must be >= 2");
  if (!sums_to_one(age_group_probs)) throw ConfigError("age_group_probs must sum to 1");
  if (!sums_to_one(sex_probs)) throw ConfigError("sex_probs must sum to 1");
}

std::array<double, 4> chronotype_probs(AgeGroup group) {
  // {Dolphin, Lion, Bear, Wolf}
  switch (group) {
    case AgeGroup::G25_37: return {0.20, 0.05, 0.50, 0.25};
    case AgeGroup::G38_45: return {0.10, 0.15, 0.50, 0.25};
    case AgeGroup::G46_55:
    case AgeGroup::G56_65: return {0.00, 0.35, 0.50, 0.15};
  }
  return {0.0, 0.0, 1.0, 0.0};
}

Chronotype chronotype_at_quantile(AgeGroup group, double q) {
  const auto p = chronotype_probs(group);
  std::array<double, 4> ordered{};
  for (std::size_t i = 0; i < kDrawOrder.size(); ++i) {
    ordered[i] = p[static_cast<std::size_t>(kDrawOrder[i])];
  }
  return kDrawOrder[categorical_at(ordered, q)];
}

Chronotype sample_chronotype(AgeGroup group, Rng& rng) {
  return chronotype_at_quantile(group, uniform01(rng));
}

Annotator make_annotator(int id, AgeGroup group, Sex sex, Chronotype chronotype, int avg_mood,
                         double overall_draw, const std::vector<double>& label_draws) {
  Annotator a;
  a.id = id;
  a.age_group = group;
  a.sex = sex;
  a.chronotype = chronotype;
  a.avg_mood = avg_mood;
  a.base_overall_accuracy = std::clamp(overall_draw, 0.0, 1.0);
  a.base_label_accuracy.reserve(label_draws.size());
  a.history.reserve(label_draws.size());
  for (double d : label_draws) {
    const double acc = std::clamp(d, 0.0, 1.0);
    a.base_label_accuracy.push_back(acc);
    a.history.push_back({static_cast<std::int64_t>(std::lround(kPseudoHistorySize * acc)),
                         kPseudoHistorySize});
  }
  return a;
}

Annotator generate_annotator(int id, const BatchConfig& config, Rng& rng) {
  const auto group = static_cast<AgeGroup>(categorical_at(config.age_group_probs, uniform01(rng)));
  const auto sex = static_cast<Sex>(categorical_at(config.sex_probs, uniform01(rng)));
  const auto chronotype = sample_chronotype(group, rng);
  const int avg_mood = std::uniform_int_distribution<int>(kMinAvgMood, kMaxAvgMood)(rng);

  const double overall =
      std::clamp(std::normal_distribution<double>(kOverallAccuracyMean, kOverallAccuracySd)(rng),
                 0.0, 1.0);
  std::normal_distribution<double> per_label(overall, kLabelAccuracySd);
  std::vector<double> draws(static_cast<std::size_t>(config.num_labels));
  for (auto& d : draws) d = per_label(rng);
  return make_annotator(id, group, sex, chronotype, avg_mood, overall, draws);
}

std::vector<Annotator> generate_batch(const BatchConfig& config) {
  config.validate();
  Rng rng = keyed_rng(config.rng_seed, Stream::Population,
                      {static_cast<std::uint64_t>(config.batch_id)});
  std::vector<Annotator> out;
  out.reserve(static_cast<std::size_t>(config.n_annotators));
  for (int i = 0; i < config.n_annotators; ++i) out.push_back(generate_annotator(i, config, rng));
  return out;
}

}  // namespace annotsim
