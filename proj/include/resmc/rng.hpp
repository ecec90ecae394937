#pragma once

#include <cstdint>

namespace resmc {

// SplitMix64: tiny, fast, and good enough statistical quality for Monte
// Carlo sampling. Every trace gets its own generator whose seed is a hash of
// (master seed, stream id, trace index), so results are reproducible for a
// given master seed regardless of scheduling or worker count.

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream ids partition the master seed's randomness between the phases of a
// run so that, e.g., adding Monte Carlo pilot traces never shifts the traces
// the optimizer sees.
enum class RngPhase : std::uint64_t {
  kMonteCarlo = 0,
  kInitialSearch = 1,
  kCeIteration = 2,
  kFinalEstimate = 3,
  kTraceDebug = 4,
};

inline constexpr std::uint64_t stream_id(RngPhase phase, std::uint64_t index) {
  return (static_cast<std::uint64_t>(phase) << 48) | index;
}

inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::uint64_t stream,
                                           std::uint64_t trace_index) {
  return mix64(mix64(mix64(master) ^ stream) ^ trace_index);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits; never returns 1.0.
  constexpr double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace resmc
