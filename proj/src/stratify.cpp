#include "annotsim/stratify.hpp"

#include <algorithm>
#include <limits>

namespace annotsim {

std::vector<std::vector<std::size_t>> rows_by_class(const Dataset& data,
                                                    std::span<const std::size_t> rows) {
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(data.num_classes));
  for (auto r : rows) groups[static_cast<std::size_t>(data.labels[r])].push_back(r);
  return groups;
}

std::vector<std::size_t> allocate_quota(const std::vector<std::vector<std::size_t>>& groups,
                                        std::size_t quota, std::size_t floor_each) {
  const std::size_t c = groups.size();
  std::vector<std::size_t> take(c, 0);
  std::size_t used = 0;
  std::size_t available = 0;
  for (std::size_t k = 0; k < c; ++k) {
    take[k] = std::min(floor_each, groups[k].size());
    used += take[k];
    available += groups[k].size();
  }
  quota = std::min(quota, available);
  while (used < quota) {
    // Largest deficit against the proportional share; lowest class wins ties.
    std::size_t best = c;
    double best_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) {
      if (take[k] >= groups[k].size()) continue;
      const double share = static_cast<double>(quota) * static_cast<double>(groups[k].size()) /
                           static_cast<double>(available);
      const double gap = share - static_cast<double>(take[k]);
      if (gap > best_gap) {
        best_gap = gap;
        best = k;
      }
    }
    if (best == c) break;
    ++take[best];
    ++used;
  }
  return take;
}

std::vector<std::size_t> draw_stratified(const std::vector<std::vector<std::size_t>>& groups,
                                         const std::vector<std::size_t>& take, Rng& rng) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    auto g = groups[k];
    for (std::size_t i = 0; i < take[k]; ++i) {
      const auto j = std::uniform_int_distribution<std::size_t>(i, g.size() - 1)(rng);
      std::swap(g[i], g[j]);
      out.push_back(g[i]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> stratified_sample(const Dataset& data, std::span<const std::size_t> rows,
                                           std::size_t quota, std::size_t floor_each, Rng& rng) {
  const auto groups = rows_by_class(data, rows);
  return draw_stratified(groups, allocate_quota(groups, quota, floor_each), rng);
}

}  // namespace annotsim
