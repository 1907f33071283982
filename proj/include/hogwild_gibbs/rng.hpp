#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

namespace hogwild {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Reproducible random stream identified by (seed, stream id).
///
/// The same pair always yields the same draw sequence. Streams with
/// different ids are seeded through std::seed_seq, whose output is fixed by
/// the standard, so sequences are identical across toolchains. Satisfies
/// UniformRandomBitGenerator so it can drive <random> distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform double in [0, 1) built from the top 53 bits of one engine draw.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // floor(u * n) for one uniform u; the rounding case floor(u * n) == n is
  // rejected and redrawn.
  std::size_t index(std::size_t n) {
    for (;;) {
      const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
      if (i < n) return i;
    }
  }

  // Independent stream derived from this stream's identity (not its state).
  RngStream substream(std::uint64_t tag) const {
    return RngStream(seed_, detail::splitmix64(stream_ ^ detail::splitmix64(tag + 1)));
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

// Tags for substreams with a fixed role.
inline constexpr std::uint64_t kDelayStreamTag = 0xde1a7;
inline constexpr std::uint64_t kSequentialBatchTag = 0x5e9;
inline constexpr std::uint64_t kHogwildBatchTag = 0x409;

}  // namespace hogwild
