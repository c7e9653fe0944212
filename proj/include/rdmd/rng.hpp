#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rdmd {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Derive an independent 64-bit seed from a parent seed and a stream name.
inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream) {
  return detail::splitmix64(detail::splitmix64(parent) ^ detail::fnv1a(stream));
}

inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return detail::splitmix64(detail::splitmix64(parent) + detail::splitmix64(index ^ 0x5851f42d4c957f2dULL));
}

/// A named random stream. Streams split by name are independent of each other,
/// so e.g. dynamics and measurement noise never share draws.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view stream) : seed_(derive_seed(seed, stream)), engine_(seed_) {}

  Rng split(std::string_view stream) const { return Rng(seed_, stream); }

  std::uint64_t seed() const noexcept { return seed_; }

  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    if (stddev == 0.0) return mean;
    return mean + stddev * standard_normal_(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> standard_normal_{0.0, 1.0};
};

}  // namespace rdmd
