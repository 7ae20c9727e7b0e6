#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "annotsim/learner.hpp"

namespace annotsim {

struct ForestParams {
  int n_trees = 50;
  int max_depth = 12;
  // Features tried per split; 0 means floor(sqrt(D)).
  int max_features = 0;
  bool bootstrap = true;
  // Upper bound on quantile bins per feature (2..256).
  int max_bins = 32;

  void validate() const;
};

// Per-feature quantile binning of a dataset. Codes are stored feature-major
// so a split search over one feature reads contiguous memory, plus a
// row-major copy for prediction.
class FeatureBins {
 public:
  FeatureBins(const Dataset& data, int max_bins);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_features() const { return edges_.size(); }
  int bins(std::size_t feature) const { return static_cast<int>(edges_[feature].size()) + 1; }
  std::uint8_t code(std::size_t feature, std::size_t row) const {
    return codes_[feature * n_rows_ + row];
  }
  const std::uint8_t* column(std::size_t feature) const { return codes_.data() + feature * n_rows_; }
  const std::uint8_t* row(std::size_t r) const { return row_codes_.data() + r * edges_.size(); }
  std::uint8_t encode(std::size_t feature, double value) const;

 private:
  std::size_t n_rows_ = 0;
  std::vector<std::vector<double>> edges_;
  std::vector<std::uint8_t> codes_;
  std::vector<std::uint8_t> row_codes_;
};

// Bag of randomized depth-limited Gini trees grown on binned features.
// Predictions average the per-tree leaf class frequencies.
class RandomForest : public ProbabilisticClassifier {
 public:
  RandomForest(std::shared_ptr<const Dataset> data, ForestParams params = {});

  void fit(std::span<const std::size_t> rows, std::span<const int> labels,
           std::uint64_t seed) override;
  bool fitted() const override { return fitted_; }
  int num_classes() const override { return num_classes_; }
  ProbVector predict_proba(std::size_t row) const override;
  std::vector<ProbVector> predict_proba_rows(std::span<const std::size_t> rows) const override;
  // Prediction for a raw feature vector that need not belong to the dataset.
  ProbVector predict_features(std::span<const double> x) const;

  const ForestParams& params() const { return params_; }
  std::size_t node_count() const;

 private:
  // Children are allocated in pairs, so the right child is left + 1.
  struct Node {
    std::int32_t child = -1;    // left child, or leaf index for a leaf
    std::int16_t feature = -1;  // -1 marks a leaf
    std::uint8_t threshold = 0;  // code <= threshold goes left
  };
  struct Tree {
    std::vector<Node> nodes;
    std::vector<double> leaf_probs;
  };

  template <typename CodeFn>
  void accumulate(double* acc, CodeFn&& code_of) const;
  ProbVector finish(std::vector<double> acc) const;
  Tree grow_tree(std::span<const std::size_t> rows, std::span<const int> row_labels,
                 std::uint64_t seed, int tree_index) const;

  std::shared_ptr<const Dataset> data_;
  ForestParams params_;
  FeatureBins bins_;
  int num_classes_ = 0;
  bool fitted_ = false;
  std::vector<Tree> trees_;
};

}  // namespace annotsim
