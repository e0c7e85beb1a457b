#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace agit {

// xoshiro256++ generator. Fixed algorithm so identical seeds give identical
// streams on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  void reseed(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) via 128-bit multiply with rejection.
  std::uint64_t uniform_int(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t s_[4] = {};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Derives an independent seed from a master seed, a purpose label, and an
// index. Used to give every consumer (init per network, shuffle per epoch,
// flips, pools) its own reproducible stream.
std::uint64_t stream_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index = 0);

// Sets the process-wide master seed that global_seed() reports.
void seed_all(std::uint64_t seed);
std::uint64_t global_seed();

// Fisher-Yates shuffle driven by Rng so the permutation is identical across
// standard libraries (std::shuffle is implementation defined).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace agit
