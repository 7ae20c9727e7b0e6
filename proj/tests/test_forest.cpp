#include <memory>
#include <numeric>

#include "doctest.h"

#include "annotsim/forest.hpp"
#include "annotsim/rng.hpp"

using namespace annotsim;

namespace {

// Two Gaussian-free separable blobs: label = x0 + x1 > 1.
std::shared_ptr<Dataset> separable(std::size_t n, std::uint64_t seed) {
  auto d = std::make_shared<Dataset>();
  d->n_rows = n;
  d->n_features = 3;
  d->num_classes = 2;
  Rng rng = keyed_rng(seed, Stream::Subsample);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = uniform01(rng), b = uniform01(rng), noise = uniform01(rng);
    d->features.insert(d->features.end(), {a, b, noise});
    d->labels.push_back(a + b > 1.0 ? 1 : 0);
  }
  return d;
}

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> r(d.n_rows);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

}  // namespace

TEST_CASE("forest fits a separable toy set") {
  const auto data = separable(200, 1);
  RandomForest f(data);
  const auto rows = all_rows(*data);
  f.fit(rows, data->labels, 42);
  CHECK(f.fitted());
  CHECK(evaluate(f, *data).accuracy >= 0.95);
  for (auto r : rows) {
    const auto p = f.predict_proba(r);
    CHECK(p.size() == 2);
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("single-class training gives one-hot predictions") {
  const auto data = separable(50, 2);
  RandomForest f(data);
  std::vector<std::size_t> rows{0, 1, 2, 3, 4};
  std::vector<int> labels(5, 1);
  f.fit(rows, labels, 1);
  for (std::size_t r = 0; r < data->n_rows; ++r) {
    const auto p = f.predict_proba(r);
    CHECK(p[1] == 1.0);
    CHECK(p[0] == 0.0);
  }
}

TEST_CASE("forest is deterministic in its seed") {
  const auto data = separable(120, 3);
  const auto rows = all_rows(*data);
  RandomForest a(data), b(data), c(data);
  a.fit(rows, data->labels, 7);
  b.fit(rows, data->labels, 7);
  c.fit(rows, data->labels, 8);
  bool differs = false;
  for (auto r : rows) {
    CHECK(a.predict_proba(r).values() == b.predict_proba(r).values());
    differs |= a.predict_proba(r).values() != c.predict_proba(r).values();
  }
  CHECK(differs);
}

TEST_CASE("batch prediction matches row prediction and raw features") {
  const auto data = separable(150, 4);
  const auto rows = all_rows(*data);
  RandomForest f(data, ForestParams{.n_trees = 20, .max_depth = 6});
  std::vector<std::size_t> train(rows.begin(), rows.begin() + 60);
  std::vector<int> labels(data->labels.begin(), data->labels.begin() + 60);
  f.fit(train, labels, 3);
  const auto batch = f.predict_proba_rows(rows);
  for (auto r : rows) {
    CHECK(batch[r].values() == f.predict_proba(r).values());
    CHECK(f.predict_features(data->row(r)).values() == f.predict_proba(r).values());
  }
  CHECK(f.node_count() > 20);
}

TEST_CASE("depth one forest is a bag of stumps") {
  const auto data = separable(100, 5);
  RandomForest f(data, ForestParams{.n_trees = 5, .max_depth = 1});
  const auto rows = all_rows(*data);
  f.fit(rows, data->labels, 1);
  CHECK(f.node_count() <= 15);
}

TEST_CASE("absent classes get probability zero") {
  auto data = separable(60, 6);
  data->num_classes = 3;
  RandomForest f(data);
  const auto rows = all_rows(*data);
  f.fit(rows, data->labels, 1);
  for (auto r : rows) CHECK(f.predict_proba(r)[2] == 0.0);
}

TEST_CASE("fit rejects bad input") {
  const auto data = separable(10, 7);
  RandomForest f(data);
  std::vector<std::size_t> rows{0, 1};
  std::vector<int> bad{0, 5};
  CHECK_THROWS(f.fit(rows, bad, 1));
  std::vector<std::size_t> none;
  std::vector<int> no_labels;
  CHECK_THROWS(f.fit(none, no_labels, 1));
  CHECK_THROWS(RandomForest(data, ForestParams{.n_trees = 0}));
}
