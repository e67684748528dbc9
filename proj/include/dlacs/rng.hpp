// Random streams for replica-parallel simulation.
//
// Every replica owns a sequential stream derived from one master seed by a
// counter-based split, so results never depend on scheduling. Graphical
// constructions additionally need random access into per-vertex and
// per-origin randomness; `CounterStream` provides that by hashing a key.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dlacs {

/// SplitMix64 finaliser. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of replica `index` under `master`. Distinct indices give
/// statistically independent streams.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index ^ 0x5851f42d4c957f2dULL));
}

/// Combine a seed with up to three keys into a fresh 64-bit state.
constexpr std::uint64_t key_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) noexcept {
  return mix64(mix64(mix64(seed ^ mix64(a)) ^ b) ^ (c * 0xd1342543de82ef95ULL));
}

namespace detail {
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}
__extension__ using u128 = unsigned __int128;
constexpr std::uint32_t to_below(std::uint64_t bits, std::uint32_t n) noexcept {
  return static_cast<std::uint32_t>((static_cast<u128>(bits) * n) >> 64);
}
}  // namespace detail

/// Sequential stream used by one replica. Each helper consumes exactly one
/// 64-bit draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return detail::to_unit(engine_()); }
  /// Uniform on the open interval (0, 1).
  double open_uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }
  /// Uniform integer in [0, n); n must be positive.
  std::uint32_t below(std::uint32_t n) { return detail::to_below(engine_(), n); }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Small SplitMix64 stream keyed by a hash. Cheap to construct, so it can be
/// re-created on demand for random access into a fixed random object.
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t bits() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  constexpr double uniform() noexcept { return detail::to_unit(bits()); }
  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }
  constexpr std::uint32_t below(std::uint32_t n) noexcept { return detail::to_below(bits(), n); }

 private:
  std::uint64_t state_;
};

}  // namespace dlacs
