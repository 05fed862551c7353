#pragma once

#include <cstdint>
#include <vector>

namespace sosmatch {

// Portable, seedable 64-bit generator (xoshiro256++ seeded via splitmix64).
// All randomness in the library flows through this class so that runs with the
// same seed produce byte-identical output on every platform. std::random
// distributions are avoided on purpose: their output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  // Uniform double in [0, 1) with 53 bits of precision.
  double next_double();

  // Uniform integer in [0, n). n must be positive.
  uint64_t next_below(uint64_t n);

  // Index sampled according to the (not necessarily normalized) nonnegative
  // weights. Ties and rounding are resolved deterministically by scanning the
  // cumulative sums left to right.
  int sample_weighted(const std::vector<double>& weights);

  // Derive an independent deterministic stream, e.g. one per worker.
  Rng split();

 private:
  uint64_t state_[4];
};

// splitmix64 step, exposed for stable hashing of seeds and instance content.
uint64_t splitmix64(uint64_t& state);

}  // namespace sosmatch
