#include "agit/rng.hpp"

#include <atomic>

namespace agit {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::atomic<std::uint64_t> g_master_seed{0};

}  // namespace

void Rng::reseed(std::uint64_t seed) {
  // splitmix64 expansion; a zero state is impossible for any seed.
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
  has_spare_ = false;
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  // Lemire's multiply-shift with rejection of the biased low range.
  __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (lo < threshold) {
      m = static_cast<__uint128_t>(next_u64()) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t stream_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index) {
  // FNV-1a over the label folds the purpose into the stream identity.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : purpose) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t x = master;
  std::uint64_t mixed = splitmix64(x) ^ h;
  mixed ^= index + 0x9e3779b97f4a7c15ULL + (mixed << 6) + (mixed >> 2);
  return splitmix64(mixed);
}

void seed_all(std::uint64_t seed) { g_master_seed.store(seed, std::memory_order_relaxed); }

std::uint64_t global_seed() { return g_master_seed.load(std::memory_order_relaxed); }

}  // namespace agit
