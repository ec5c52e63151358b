#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace spatboost {

// Input/validation problems (CLI exit code 2).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical/estimation failures (CLI exit code 3).
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent child stream seed. Streams are organized as
// scenario seed -> replication seed -> {train, test, folds, ...} substreams.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag + 0x51ed2701a3b4c5d6ULL));
}

inline std::mt19937_64 engine(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

// Draws k distinct indices from [0, n) via partial Fisher-Yates.
inline std::vector<int> sample_without_replacement(int n, int k,
                                                   std::mt19937_64& gen) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> d(i, n - 1);
    std::swap(idx[i], idx[d(gen)]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace rng

inline constexpr const char* kVersion = "spatboost 0.1.0";

}  // namespace spatboost
