#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace cycloroute {

/// Named random streams. Every random draw in the library comes from a
/// CounterRng keyed by (root seed, stream, substream), so each component's
/// draws are reproducible independently of how many draws others make.
enum class Stream : std::uint32_t {
  Network = 1,      // synthetic topology and base travel times
  Temporal = 2,     // temporal templates and planted spatial modes
  Noise = 3,        // relative Gaussian noise
  Transients = 4,   // congestion events
  Missingness = 5,  // random cells and blackouts
  TestSet = 6,      // OD node sampling
  Communities = 7,  // Louvain sweep order and betweenness source sampling
  Testing = 99,     // test harnesses
};

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The output is a pure function of (key, counter); the distributions below
/// are implemented here rather than taken from <random> because the standard
/// distributions are not bit-reproducible across library implementations.
class CounterRng {
 public:
  using result_type = std::uint32_t;

  CounterRng(std::uint64_t seed, Stream stream, std::uint32_t substream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;
  double exponential(double mean) noexcept;

  /// Single block evaluation, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                             std::array<std::uint32_t, 2> key) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Fisher-Yates shuffle driven by a CounterRng.
template <typename RandomIt>
void shuffle(RandomIt first, RandomIt last, CounterRng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.uniform_int(i);
    std::swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
  }
}

}  // namespace cycloroute
