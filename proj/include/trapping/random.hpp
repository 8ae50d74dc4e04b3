#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace trapping {

/// Reproducible random stream keyed by a (seed, stream) pair.
///
/// Every Monte Carlo sample draws from its own substream, so results do not
/// depend on how samples are partitioned across workers. The key is mixed
/// before seeding so neighbouring stream ids give unrelated sequences.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exponential waiting time with the given rate (> 0).
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }

  /// Independent child stream; deterministic in (seed, stream, index).
  RandomStream substream(std::uint64_t index) const {
    return RandomStream(seed_, mix(stream_ * 0x2545f4914f6cdd1dULL + index + 1));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  // SplitMix64 finaliser.
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace trapping
