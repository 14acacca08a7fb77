#pragma once

#include <cstdint>

namespace dragan {

/// SplitMix64 finalizer; used both as the generator core and to derive
/// independent streams from (seed, index) pairs.
constexpr uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr uint64_t derive_seed(uint64_t seed, uint64_t index) {
  return mix64(seed ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

/// Counter-based random stream. The full state is (seed, position), so it
/// serializes trivially and identical call sequences reproduce identical
/// values on every platform (no std:: distributions involved).
class RngState {
 public:
  RngState() = default;
  explicit RngState(uint64_t seed, uint64_t position = 0) : seed_(seed), position_(position) {}

  uint64_t seed() const { return seed_; }
  uint64_t position() const { return position_; }

  uint64_t next_u64() { return mix64(seed_ + 0xD1B54A32D192ED03ULL * ++position_); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  uint64_t below(uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller (one value per call).
  double normal();

  /// An independent stream keyed by `index`; does not advance this one.
  RngState fork(uint64_t index) const { return RngState(derive_seed(seed_, index)); }

  friend bool operator==(const RngState&, const RngState&) = default;

 private:
  uint64_t seed_ = 0;
  uint64_t position_ = 0;
};

}  // namespace dragan
