#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace poseforge {

using Rng = std::mt19937_64;

/// Independent stream for a sub-task (scene index, image id, ...) of a master seed.
inline Rng derive_stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * path.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master_seed);
  for (auto p : path) push(p);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

inline double uniform(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline bool coin(Rng& rng) { return std::bernoulli_distribution(0.5)(rng); }

}  // namespace poseforge
