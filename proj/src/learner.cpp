#include "annotsim/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "annotsim/errors.hpp"

namespace annotsim {

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(num_classes, 0)), 0);
  for (int y : labels) {
    if (y >= 0 && y < num_classes) ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

void Dataset::validate() const {
  if (n_rows == 0) throw DataError("dataset has no rows");
  if (features.size() != n_rows * n_features) throw DataError("feature matrix shape mismatch");
  if (labels.size() != n_rows) throw DataError("label count does not match row count");
  if (num_classes < 2) throw DataError("dataset needs at least two classes");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw DataError("label out of range");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
}

ProbVector::ProbVector(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("empty probability vector");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("probabilities do not sum to 1");
}

std::size_t ProbVector::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

namespace {

// Largest and second largest entries.
std::pair<double, double> top_two(const ProbVector& p) {
  double first = -1.0;
  double second = -1.0;
  for (double v : p.values()) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return {first, std::max(second, 0.0)};
}

}  // namespace

double least_confidence(const ProbVector& p) { return 1.0 - top_two(p).first; }

double margin_confidence(const ProbVector& p) {
  if (p.size() < 2) throw std::invalid_argument("margin needs at least two classes");
  const auto [a, b] = top_two(p);
  return a - b;
}

double ratio_confidence(const ProbVector& p) {
  if (p.size() < 2) throw std::invalid_argument("ratio needs at least two classes");
  const auto [a, b] = top_two(p);
  if (b == 0.0) return std::numeric_limits<double>::infinity();
  return a / b;
}

double entropy(const ProbVector& p) {
  double h = 0.0;
  for (double v : p.values()) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return std::max(h, 0.0);
}

std::vector<int> query_type(const ProbVector& p) {
  const double floor = 1.0 / static_cast<double>(p.size());
  std::vector<int> t;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > floor) t.push_back(static_cast<int>(i));
  }
  if (t.empty()) return {static_cast<int>(p.argmax())};
  std::stable_sort(t.begin(), t.end(), [&p](int a, int b) {
    return p[static_cast<std::size_t>(a)] > p[static_cast<std::size_t>(b)];
  });
  return t;
}

QueryContext make_query_context(std::size_t instance_index, ProbVector probs) {
  QueryContext ctx;
  ctx.instance_index = instance_index;
  ctx.uncertainty = entropy(probs);
  ctx.query_type_labels = query_type(probs);
  ctx.probs = std::move(probs);
  return ctx;
}

std::vector<ProbVector> ProbabilisticClassifier::predict_proba_rows(
    std::span<const std::size_t> rows) const {
  std::vector<ProbVector> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(predict_proba(r));
  return out;
}

QueryContext select_query(const ProbabilisticClassifier& model,
                          std::span<const std::size_t> pool) {
  if (pool.empty()) throw std::invalid_argument("select_query on an empty pool");
  auto probs = model.predict_proba_rows(pool);
  std::size_t best = 0;
  double best_h = -1.0;
  std::size_t best_index = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double h = entropy(probs[i]);
    if (h > best_h || (h == best_h && pool[i] < best_index)) {
      best = i;
      best_h = h;
      best_index = pool[i];
    }
  }
  return make_query_context(pool[best], std::move(probs[best]));
}

Evaluation score_predictions(std::span<const int> predicted, std::span<const int> truth,
                             int num_classes) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("size mismatch");
  if (truth.empty()) return {};
  const auto c = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> tp(c, 0), fp(c, 0), fn(c, 0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto y = static_cast<std::size_t>(truth[i]);
    const auto yhat = static_cast<std::size_t>(predicted[i]);
    if (y == yhat) {
      ++hits;
      ++tp[y];
    } else {
      ++fp[yhat];
      ++fn[y];
    }
  }
  double f1_sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    const double denom = static_cast<double>(2 * tp[k] + fp[k] + fn[k]);
    if (tp[k] > 0) f1_sum += 2.0 * static_cast<double>(tp[k]) / denom;
  }
  return {static_cast<double>(hits) / static_cast<double>(truth.size()),
          f1_sum / static_cast<double>(c)};
}

Evaluation evaluate(const ProbabilisticClassifier& model, const Dataset& data,
                    std::span<const std::size_t> rows) {
  if (!model.fitted()) throw std::logic_error("evaluate before fit");
  const auto probs = model.predict_proba_rows(rows);
  std::vector<int> predicted(rows.size()), truth(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    predicted[i] = static_cast<int>(probs[i].argmax());
    truth[i] = data.labels[rows[i]];
  }
  return score_predictions(predicted, truth, data.num_classes);
}

Evaluation evaluate(const ProbabilisticClassifier& model, const Dataset& data) {
  std::vector<std::size_t> rows(data.n_rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return evaluate(model, data, rows);
}

}  // namespace annotsim
