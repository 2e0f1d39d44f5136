#pragma once

#include <cstdint>
#include <numbers>
#include <random>

namespace apnet {

/// Seeded generator with a platform-independent double mapping, so seeded
/// scenario draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  double angle() { return uniform(0.0, 2.0 * std::numbers::pi); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace apnet
