#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "annotsim/learner.hpp"
#include "annotsim/rng.hpp"

namespace annotsim {

// Members of `rows` grouped by class label.
std::vector<std::vector<std::size_t>> rows_by_class(const Dataset& data,
                                                    std::span<const std::size_t> rows);

// Per-class quotas summing to min(quota, available): `floor_each` per class
// first, the remainder in proportion to class size.
std::vector<std::size_t> allocate_quota(const std::vector<std::vector<std::size_t>>& groups,
                                        std::size_t quota, std::size_t floor_each);

// Random draw of the allocated number of rows from each class, sorted.
std::vector<std::size_t> draw_stratified(const std::vector<std::vector<std::size_t>>& groups,
                                         const std::vector<std::size_t>& take, Rng& rng);

std::vector<std::size_t> stratified_sample(const Dataset& data, std::span<const std::size_t> rows,
                                           std::size_t quota, std::size_t floor_each, Rng& rng);

}  // namespace annotsim
