#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sot {

/// Derives an independent child seed from a parent seed and a stream label.
/// All randomness in the library flows from one user seed through this
/// function, so every sub-step can be reproduced on its own.
std::uint64_t split_seed(std::uint64_t parent, std::string_view label, std::uint64_t index = 0);

/// Seeded generator with a platform-stable bounded draw (std distributions
/// are implementation-defined, so they are avoided here).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sot
