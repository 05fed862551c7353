#include "sosmatch/rng.hpp"

#include <stdexcept>

namespace sosmatch {

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(uint64_t seed) {
  uint64_t s = seed;
  for (auto& word : state_) word = splitmix64(s);
}

static inline uint64_t rotl(uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::next_below(uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::next_below: n must be positive");
  // Rejection sampling for an unbiased, portable result.
  const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
  uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

int Rng::sample_weighted(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) {
    throw std::invalid_argument("Rng::sample_weighted: total weight must be positive");
  }
  const double u = next_double() * total;
  double cum = 0.0;
  for (size_t k = 0; k < weights.size(); ++k) {
    cum += weights[k];
    if (u < cum) return static_cast<int>(k);
  }
  // Fall through only on rounding at the right edge: pick last positive weight.
  for (size_t k = weights.size(); k-- > 0;) {
    if (weights[k] > 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(weights.size()) - 1;
}

Rng Rng::split() {
  const uint64_t a = next_u64();
  const uint64_t b = next_u64();
  return Rng(a ^ rotl(b, 32));
}

}  // namespace sosmatch
