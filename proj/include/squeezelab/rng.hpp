#pragma once

#include <cstdint>
#include <limits>

namespace squeezelab {

/// Stream domains keep the substreams of different consumers disjoint.
enum class StreamDomain : std::uint64_t {
  tw_initial = 1,
  pp_trajectory = 2,
  test = 99,
};

/// Counter-based generator: the i-th output of stream (seed, domain, index) is a
/// SplitMix64 finalisation of key + i * gamma. A trajectory's draws therefore
/// depend only on its index, never on which worker produced it.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t master_seed, StreamDomain domain, std::uint64_t stream_index) noexcept
      : key_(mix(mix(master_seed ^ (static_cast<std::uint64_t>(domain) * kGamma)) + stream_index)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix(key_ + (++counter_) * kGamma); }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace squeezelab
