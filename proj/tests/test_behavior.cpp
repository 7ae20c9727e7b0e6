#include <cmath>

#include "doctest.h"

#include "annotsim/behavior.hpp"
#include "annotsim/errors.hpp"
#include "oracles.hpp"

using namespace annotsim;

TEST_CASE("fatigue level thresholds") {
  const SimParams p;
  CHECK(fatigue_level(0, p) == 0);
  CHECK(fatigue_level(49, p) == 0);
  CHECK(fatigue_level(50, p) == 1);
  CHECK(fatigue_level(69, p) == 1);
  CHECK(fatigue_level(70, p) == 2);
  for (int n = 0; n < 1000; ++n) {
    CHECK(fatigue_level(n, p) == oracle::fatigue_level(n));
    CHECK(fatigue_level(n + 1, p) >= fatigue_level(n, p));
    if (n >= p.fatigue_start) CHECK(fatigue_level(n + p.fatigue_step, p) == fatigue_level(n, p) + 1);
  }
}

TEST_CASE("fatigue window covers the current and previous period of one day") {
  FatigueLedger l;
  l.record(1, 0, 0, 40);
  CHECK(fatigue_window_count(l, 1, 0, 0) == 40);
  l.record(1, 0, 1, 30);
  l.record(1, 0, 2, 25);
  CHECK(fatigue_window_count(l, 1, 0, 2) == 55);
  CHECK(fatigue_window_count(l, 1, 0, 1) == 70);
  // Day 1 counts never leak into day 2.
  l.record(1, 1, 2, 100);
  l.record(1, 2, 1, 3);
  CHECK(fatigue_window_count(l, 1, 2, 1) == 3);
  CHECK(fatigue_window_count(l, 1, 2, 0) == 0);
  CHECK(fatigue_window_count(l, 2, 0, 2) == 0);
  CHECK(l.total() == 198);
  CHECK(l.total_for(1) == 198);
  CHECK(l.total_for(2) == 0);
}

TEST_CASE("mood trajectory offsets") {
  CHECK(mood_trajectory_from(Chronotype::Lion, 8, 0, 0).moods == std::array<int, 3>{8, 8, 7});
  CHECK(mood_trajectory_from(Chronotype::Lion, 8, 1, 1).moods == std::array<int, 3>{8, 9, 6});
  CHECK(mood_trajectory_from(Chronotype::Dolphin, 10, 1, 1).moods == std::array<int, 3>{10, 10, 10});
  CHECK(mood_trajectory_from(Chronotype::Dolphin, 4, 1, 0).moods == std::array<int, 3>{4, 5, 5});
  CHECK(mood_trajectory_from(Chronotype::Bear, 4, 1, 0).moods == std::array<int, 3>{4, 6, 5});
  CHECK(mood_trajectory_from(Chronotype::Wolf, 4, 0, 1).moods == std::array<int, 3>{4, 5, 6});
  CHECK(mood_trajectory_from(Chronotype::Lion, 1, 1, 1).moods == std::array<int, 3>{1, 2, 1});
}

TEST_CASE("first mood ceiling") {
  Annotator a;
  a.avg_mood = 7;
  a.chronotype = Chronotype::Lion;
  CHECK(first_mood_ceiling(a) == 8);
  a.chronotype = Chronotype::Bear;
  CHECK(first_mood_ceiling(a) == 7);
  a.avg_mood = 10;
  a.chronotype = Chronotype::Lion;
  CHECK(first_mood_ceiling(a) == 10);
}

TEST_CASE("mood trajectory properties over many draws") {
  Rng rng = keyed_rng(5, Stream::Mood);
  for (auto c : {Chronotype::Dolphin, Chronotype::Lion, Chronotype::Bear, Chronotype::Wolf}) {
    Annotator a;
    a.chronotype = c;
    for (int avg = 3; avg <= 7; ++avg) {
      a.avg_mood = avg;
      for (int i = 0; i < 2000; ++i) {
        const auto m = mood_trajectory(a, rng).moods;
        for (int v : m) {
          CHECK(v >= kMinMood);
          CHECK(v <= kMaxMood);
        }
        CHECK(m[0] <= first_mood_ceiling(a));
        if (c == Chronotype::Dolphin) CHECK(m[2] >= m[0]);
        if (c == Chronotype::Lion) CHECK(m[1] >= m[2]);
        if (c == Chronotype::Bear || c == Chronotype::Wolf) {
          CHECK(std::min(m[1], m[2]) >= std::min(m[0], 10));
        }
      }
    }
  }
}

TEST_CASE("effective accuracy") {
  SimParams p;
  CHECK(effective_accuracy(0.75, 5, 5, 0, p) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(std::abs(effective_accuracy(0.75, 6, 5, 0, p) - 0.795) <= 1e-12);
  p.fatigue_penalty = 0.04;
  CHECK(std::abs(effective_accuracy(0.795, 5, 5, 2, p) - 0.715) <= 1e-12);
  CHECK(effective_accuracy(0.99, 10, 3, 0, p) == 1.0);
  CHECK(effective_accuracy(0.05, 5, 5, 10, p) == 0.0);
  for (int lvl = 0; lvl < 10; ++lvl) {
    CHECK(effective_accuracy(0.7, 5, 5, lvl + 1, p) <= effective_accuracy(0.7, 5, 5, lvl, p));
  }
  for (int mood = 1; mood < 7; ++mood) {
    CHECK(effective_accuracy(0.6, mood + 1, 5, 0, p) > effective_accuracy(0.6, mood, 5, 0, p));
  }
}

TEST_CASE("simulate_label extremes and calibration") {
  Rng rng = keyed_rng(9, Stream::Label);
  for (int i = 0; i < 200; ++i) {
    const auto o = simulate_label_with(1.0, 1, 4, rng);
    CHECK(o.given_label == 1);
    CHECK(o.correct);
    const auto w = simulate_label_with(0.0, 0, 2, rng);
    CHECK(w.given_label == 1);
    CHECK_FALSE(w.correct);
  }
  // Wrong labels are spread uniformly over the other classes.
  std::array<int, 4> wrong{};
  for (int i = 0; i < 30000; ++i) wrong[simulate_label_with(0.0, 2, 4, rng).given_label]++;
  CHECK(wrong[2] == 0);
  for (int k : {0, 1, 3}) CHECK(std::abs(wrong[k] / 30000.0 - 1.0 / 3.0) < 0.015);

  int correct = 0;
  for (int i = 0; i < 10000; ++i) correct += simulate_label_with(0.8, 0, 3, rng).correct;
  CHECK(std::abs(correct / 10000.0 - 0.8) <= 0.01);
}

TEST_CASE("simulate_label uses the annotator's effective accuracy") {
  Annotator a;
  a.avg_mood = 5;
  a.base_label_accuracy = {0.6, 0.9};
  a.history = {{60, 100}, {90, 100}};
  SimParams p;
  p.fatigue_penalty = 0.04;
  Rng rng = keyed_rng(4, Stream::Label);
  int correct = 0;
  for (int i = 0; i < 10000; ++i) correct += simulate_label(a, 1, 6, 1, p, rng).correct;
  CHECK(std::abs(correct / 10000.0 - effective_accuracy(0.9, 6, 5, 1, p)) <= 0.01);
}

TEST_CASE("update_history folds observations into counts") {
  Annotator a;
  a.base_label_accuracy = {0.82, 0.7};
  a.history = {{82, 100}, {70, 100}};
  CHECK(update_history(a, {}) == a);
  std::vector<Observation> obs(10, Observation{0, true});
  obs[3].correct = false;
  const auto b = update_history(a, obs);
  CHECK(b.history[0] == LabelHistory{91, 110});
  CHECK(b.label_estimate(0) == doctest::Approx(0.8273).epsilon(1e-4));
  CHECK(b.history[1] == a.history[1]);
  CHECK(b.base_label_accuracy == a.base_label_accuracy);
}

TEST_CASE("sim params validation") {
  SimParams p;
  CHECK_NOTHROW(p.validate());
  p.fatigue_step = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
