#include "annotsim/forest.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>

#include "annotsim/errors.hpp"
#include "annotsim/rng.hpp"

namespace annotsim {

void ForestParams::validate() const {
  if (n_trees < 1) throw ConfigError("forest_trees must be >= 1");
  if (max_depth < 1) throw ConfigError("forest_max_depth must be >= 1");
  if (max_features < 0) throw ConfigError("forest_max_features must be >= 0");
  if (max_bins < 2 || max_bins > 256) throw ConfigError("forest_max_bins must be in [2, 256]");
}

namespace {
constexpr std::size_t kMaxFeatures = 32767;
}

FeatureBins::FeatureBins(const Dataset& data, int max_bins) : n_rows_(data.n_rows) {
  const auto n = data.n_rows;
  edges_.resize(data.n_features);
  codes_.resize(data.n_features * n);
  std::vector<double> values(n);
  for (std::size_t f = 0; f < data.n_features; ++f) {
    for (std::size_t r = 0; r < n; ++r) values[r] = data.at(r, f);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> unique = sorted;
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

    auto& edges = edges_[f];
    if (unique.size() <= static_cast<std::size_t>(max_bins)) {
      edges.assign(unique.begin(), unique.end());
      if (!edges.empty()) edges.pop_back();
    } else {
      for (int k = 1; k < max_bins; ++k) {
        const double v = sorted[(static_cast<std::size_t>(k) * n) / static_cast<std::size_t>(max_bins)];
        if (v < sorted.back() && (edges.empty() || v > edges.back())) edges.push_back(v);
      }
    }
    auto* col = codes_.data() + f * n;
    for (std::size_t r = 0; r < n; ++r) col[r] = encode(f, values[r]);
  }
  const std::size_t d = data.n_features;
  row_codes_.resize(codes_.size());
  for (std::size_t f = 0; f < d; ++f) {
    for (std::size_t r = 0; r < n; ++r) row_codes_[r * d + f] = codes_[f * n + r];
  }
}

std::uint8_t FeatureBins::encode(std::size_t feature, double value) const {
  const auto& e = edges_[feature];
  return static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), value) - e.begin());
}

RandomForest::RandomForest(std::shared_ptr<const Dataset> data, ForestParams params)
    : data_(std::move(data)),
      params_(params),
      bins_((params_.validate(), *data_), params_.max_bins),
      num_classes_(data_->num_classes) {
  if (bins_.n_features() > kMaxFeatures) throw std::invalid_argument("too many features");
}

void RandomForest::fit(std::span<const std::size_t> rows, std::span<const int> labels,
                       std::uint64_t seed) {
  if (rows.empty()) throw std::invalid_argument("fit on an empty training set");
  if (rows.size() != labels.size()) throw std::invalid_argument("rows/labels size mismatch");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= data_->n_rows) throw std::out_of_range("training row out of range");
    if (labels[i] < 0 || labels[i] >= num_classes_) throw std::out_of_range("label out of range");
  }
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(params_.n_trees));
  for (int t = 0; t < params_.n_trees; ++t) trees.push_back(grow_tree(rows, labels, seed, t));
  trees_ = std::move(trees);
  fitted_ = true;
}

RandomForest::Tree RandomForest::grow_tree(std::span<const std::size_t> rows,
                                           std::span<const int> row_labels, std::uint64_t seed,
                                           int tree_index) const {
  Rng rng = keyed_rng(seed, Stream::Forest, {static_cast<std::uint64_t>(tree_index)});
  const std::size_t n = rows.size();
  const auto c = static_cast<std::size_t>(num_classes_);
  const std::size_t d = bins_.n_features();
  const std::size_t mtry =
      params_.max_features > 0
          ? std::min<std::size_t>(static_cast<std::size_t>(params_.max_features), d)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));

  std::vector<double> weight(n, params_.bootstrap ? 0.0 : 1.0);
  if (params_.bootstrap) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) weight[pick(rng)] += 1.0;
  }
  // Gather the in-bag rows into tree-local arrays so split searches read
  // contiguous codes instead of chasing row indices.
  std::vector<std::uint32_t> in_bag;
  in_bag.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (weight[i] > 0.0) in_bag.push_back(static_cast<std::uint32_t>(i));
  }
  const std::size_t m = in_bag.size();
  std::vector<double> w(m);
  std::vector<std::size_t> y(m);
  std::vector<std::uint8_t> local(d * m);
  for (std::size_t q = 0; q < m; ++q) {
    w[q] = weight[in_bag[q]];
    y[q] = static_cast<std::size_t>(row_labels[in_bag[q]]);
  }
  for (std::size_t f = 0; f < d; ++f) {
    const std::uint8_t* col = bins_.column(f);
    std::uint8_t* out = local.data() + f * m;
    for (std::size_t q = 0; q < m; ++q) out[q] = col[rows[in_bag[q]]];
  }
  std::vector<std::uint32_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::uint32_t{0});

  Tree tree;
  tree.nodes.emplace_back();
  struct Pending {
    std::int32_t node;
    std::size_t begin, end;
    int depth;
  };
  std::vector<Pending> stack{{0, 0, idx.size(), 0}};
  std::vector<double> counts(c), left(c), hist(256 * c, 0.0), bin_total(256, 0.0);
  std::vector<std::uint8_t> touched;
  std::vector<std::size_t> features(d);

  auto make_leaf = [&](std::int32_t node, double total) {
    tree.nodes[static_cast<std::size_t>(node)].child =
        static_cast<std::int32_t>(tree.leaf_probs.size() / c);
    for (std::size_t k = 0; k < c; ++k) tree.leaf_probs.push_back(counts[k] / total);
  };

  while (!stack.empty()) {
    const Pending job = stack.back();
    stack.pop_back();

    std::fill(counts.begin(), counts.end(), 0.0);
    for (std::size_t p = job.begin; p < job.end; ++p) {
      counts[y[idx[p]]] += w[idx[p]];
    }
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto nonzero = std::count_if(counts.begin(), counts.end(), [](double v) { return v > 0.0; });
    if (job.depth >= params_.max_depth || nonzero <= 1 || total < 2.0) {
      make_leaf(job.node, total);
      continue;
    }

    double parent_score = 0.0;
    for (double v : counts) parent_score += v * v;
    parent_score /= total;

    double best_score = parent_score + 1e-12;
    std::int32_t best_feature = -1;
    int best_threshold = 0;
    std::iota(features.begin(), features.end(), std::size_t{0});
    std::size_t tried = 0;
    for (std::size_t j = 0; j < d && tried < mtry; ++j) {
      const std::size_t r = std::uniform_int_distribution<std::size_t>(j, d - 1)(rng);
      std::swap(features[j], features[r]);
      const std::size_t f = features[j];
      const std::uint8_t* col = local.data() + f * m;
      // Only bins touched by this node are visited, so small nodes stay cheap.
      std::array<std::uint64_t, 4> occupied{};
      for (std::size_t p = job.begin; p < job.end; ++p) {
        const auto i = idx[p];
        const auto b = col[i];
        occupied[b >> 6] |= std::uint64_t{1} << (b & 63);
        bin_total[b] += w[i];
        hist[static_cast<std::size_t>(b) * c + y[i]] += w[i];
      }
      touched.clear();
      for (std::size_t word = 0; word < occupied.size(); ++word) {
        for (auto bits = occupied[word]; bits != 0; bits &= bits - 1) {
          touched.push_back(static_cast<std::uint8_t>(word * 64 + static_cast<std::size_t>(std::countr_zero(bits))));
        }
      }
      if (touched.size() > 1) {  // otherwise constant within this node
        ++tried;
        std::fill(left.begin(), left.end(), 0.0);
        double left_total = 0.0;
        for (std::size_t t = 0; t + 1 < touched.size(); ++t) {
          const std::size_t b = touched[t];
          for (std::size_t k = 0; k < c; ++k) left[k] += hist[b * c + k];
          left_total += bin_total[b];
          const double right_total = total - left_total;
          double ls = 0.0, rs = 0.0;
          for (std::size_t k = 0; k < c; ++k) {
            const double rk = counts[k] - left[k];
            ls += left[k] * left[k];
            rs += rk * rk;
          }
          const double score = ls / left_total + rs / right_total;
          if (score > best_score) {
            // Any threshold in the empty gap up to the next occupied bin gives
            // the same training split; take the middle of the gap.
            best_score = score;
            best_feature = static_cast<std::int32_t>(f);
            best_threshold = static_cast<int>((b + touched[t + 1] - 1) / 2);
          }
        }
      }
      for (auto b : touched) {
        bin_total[b] = 0.0;
        std::fill_n(hist.begin() + static_cast<std::ptrdiff_t>(b * c), c, 0.0);
      }
    }

    if (best_feature < 0) {
      make_leaf(job.node, total);
      continue;
    }

    const std::uint8_t* col = local.data() + static_cast<std::size_t>(best_feature) * m;
    const auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(job.begin),
                                    idx.begin() + static_cast<std::ptrdiff_t>(job.end),
                                    [&](std::uint32_t i) { return col[i] <= best_threshold; });
    const auto split = static_cast<std::size_t>(mid - idx.begin());

    const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto right_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    auto& node = tree.nodes[static_cast<std::size_t>(job.node)];
    node.feature = static_cast<std::int16_t>(best_feature);
    node.threshold = static_cast<std::uint8_t>(best_threshold);
    node.child = left_id;
    stack.push_back({right_id, split, job.end, job.depth + 1});
    stack.push_back({left_id, job.begin, split, job.depth + 1});
  }
  return tree;
}

template <typename CodeFn>
void RandomForest::accumulate(double* acc, CodeFn&& code_of) const {
  const auto c = static_cast<std::size_t>(num_classes_);
  for (const auto& tree : trees_) {
    const Node* nodes = tree.nodes.data();
    const Node* node = nodes;
    while (node->feature >= 0) {
      node = nodes + node->child + (code_of(static_cast<std::size_t>(node->feature)) > node->threshold);
    }
    const double* leaf = tree.leaf_probs.data() + static_cast<std::size_t>(node->child) * c;
    for (std::size_t k = 0; k < c; ++k) acc[k] += leaf[k];
  }
}

ProbVector RandomForest::finish(std::vector<double> acc) const {
  double sum = 0.0;
  for (double v : acc) sum += v;
  for (double& v : acc) v /= sum;
  return ProbVector(std::move(acc));
}

ProbVector RandomForest::predict_proba(std::size_t row) const {
  if (!fitted_) throw std::logic_error("predict before fit");
  if (row >= bins_.n_rows()) throw std::out_of_range("row out of range");
  std::vector<double> acc(static_cast<std::size_t>(num_classes_), 0.0);
  const std::uint8_t* codes = bins_.row(row);
  accumulate(acc.data(), [codes](std::size_t f) { return codes[f]; });
  return finish(std::move(acc));
}

std::vector<ProbVector> RandomForest::predict_proba_rows(std::span<const std::size_t> rows) const {
  if (!fitted_) throw std::logic_error("predict before fit");
  for (auto r : rows) {
    if (r >= bins_.n_rows()) throw std::out_of_range("row out of range");
  }
  // Tree-outer loop keeps one tree hot in cache across all rows; the
  // per-row sums are added in the same tree order as predict_proba.
  const auto c = static_cast<std::size_t>(num_classes_);
  std::vector<double> acc(rows.size() * c, 0.0);
  for (const auto& tree : trees_) {
    const Node* nodes = tree.nodes.data();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::uint8_t* codes = bins_.row(rows[i]);
      const Node* node = nodes;
      while (node->feature >= 0) {
        node = nodes + node->child + (codes[node->feature] > node->threshold);
      }
      const double* leaf = tree.leaf_probs.data() + static_cast<std::size_t>(node->child) * c;
      double* a = acc.data() + i * c;
      for (std::size_t k = 0; k < c; ++k) a[k] += leaf[k];
    }
  }
  std::vector<ProbVector> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back(finish(std::vector<double>(acc.begin() + static_cast<std::ptrdiff_t>(i * c),
                                             acc.begin() + static_cast<std::ptrdiff_t>((i + 1) * c))));
  }
  return out;
}

ProbVector RandomForest::predict_features(std::span<const double> x) const {
  if (!fitted_) throw std::logic_error("predict before fit");
  if (x.size() != bins_.n_features()) throw std::invalid_argument("feature count mismatch");
  std::vector<double> acc(static_cast<std::size_t>(num_classes_), 0.0);
  accumulate(acc.data(), [&](std::size_t f) { return bins_.encode(f, x[f]); });
  return finish(std::move(acc));
}

std::size_t RandomForest::node_count() const {
  std::size_t s = 0;
  for (const auto& t : trees_) s += t.nodes.size();
  return s;
}

}  // namespace annotsim
