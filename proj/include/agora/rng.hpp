#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "agora/bytes.hpp"

namespace agora {

// Deterministic random stream. Every stochastic choice in the simulation
// draws from an Rng that was explicitly passed in; there is no ambient
// entropy anywhere. Bounded draws use rejection sampling rather than
// std::uniform_int_distribution, whose mapping is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, bound); bound must be nonzero.
  std::uint64_t below(std::uint64_t bound);

  // Uniform in [0, 1) with 53 bits of precision.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  Bytes next_bytes(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  // Independent named substream. Splitting never perturbs this stream's
  // own position, so security randomization can be isolated from
  // algorithmic draws.
  Rng split(std::string_view label);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  std::uint64_t split_count_ = 0;
};

}  // namespace agora
