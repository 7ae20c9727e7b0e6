#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace annotsim {

// Dense row-major feature matrix with integer class labels in [0, num_classes).
struct Dataset {
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::vector<double> features;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * n_features, n_features};
  }
  double at(std::size_t r, std::size_t f) const { return features[r * n_features + f]; }
  std::vector<std::size_t> class_counts() const;
  // Throws DataError when shapes disagree, a label is out of range or a
  // value is not finite.
  void validate() const;
  bool operator==(const Dataset&) const = default;
};

// Class-probability vector; the constructor checks that entries lie in
// [0, 1] and sum to 1 within 1e-9.
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<double> probs);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& values() const { return probs_; }
  std::size_t argmax() const;

 private:
  std::vector<double> probs_;
};

// Uncertainty measures.
double least_confidence(const ProbVector& p);
double margin_confidence(const ProbVector& p);
// +infinity when the runner-up probability is zero.
double ratio_confidence(const ProbVector& p);
// Shannon entropy in bits with 0 log 0 = 0.
double entropy(const ProbVector& p);

// Labels whose probability strictly exceeds 1/C, most probable first (ties by
// lower label). Falls back to the single argmax for the uniform vector.
std::vector<int> query_type(const ProbVector& p);

struct QueryContext {
  std::size_t instance_index = 0;
  ProbVector probs;
  double uncertainty = 0.0;
  std::vector<int> query_type_labels;

  int num_labels() const { return static_cast<int>(probs.size()); }
};

QueryContext make_query_context(std::size_t instance_index, ProbVector probs);

// A probabilistic classifier bound to one dataset; training and prediction
// address instances by row index.
class ProbabilisticClassifier {
 public:
  virtual ~ProbabilisticClassifier() = default;

  virtual void fit(std::span<const std::size_t> rows, std::span<const int> labels,
                   std::uint64_t seed) = 0;
  virtual bool fitted() const = 0;
  virtual int num_classes() const = 0;
  virtual ProbVector predict_proba(std::size_t row) const = 0;
  virtual std::vector<ProbVector> predict_proba_rows(std::span<const std::size_t> rows) const;
};

// Highest-entropy pool instance, ties broken by lowest instance index.
QueryContext select_query(const ProbabilisticClassifier& model,
                          std::span<const std::size_t> pool);

struct Evaluation {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

// Accuracy and unweighted macro-F1 from predicted and true labels.
Evaluation score_predictions(std::span<const int> predicted, std::span<const int> truth,
                             int num_classes);
Evaluation evaluate(const ProbabilisticClassifier& model, const Dataset& data,
                    std::span<const std::size_t> rows);
Evaluation evaluate(const ProbabilisticClassifier& model, const Dataset& data);

}  // namespace annotsim
