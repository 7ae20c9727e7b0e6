#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace annotsim {

using Rng = std::mt19937_64;

// Stream tags so that draws for different purposes never share a generator.
enum class Stream : std::uint64_t {
  Population = 1,
  Mood = 2,
  Label = 3,
  SeedSet = 4,
  Forest = 5,
  Subsample = 6,
};

// Builds a generator from a base seed and any number of integer keys. Two
// calls with the same key tuple always produce identical streams, which is
// what makes paired runs across selection modes share their random draws.
Rng keyed_rng(std::uint64_t seed, Stream stream,
              std::initializer_list<std::uint64_t> keys = {});

// Uniform draw in [0, 1).
inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace annotsim
