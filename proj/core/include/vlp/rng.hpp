#pragma once

#include <cstdint>

namespace vlp {

// splitmix64 (Vigna). Small, fast, and the stream is a pure function of the
// 64-bit state, which makes per-patch / per-point substreams trivial to derive.
// All draws used by the simulator go through this type so results are
// bit-reproducible for a given seed on any platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1].
  double next_open_closed() { return 1.0 - next_double(); }

  // Standard normal via Box-Muller; consumes exactly two draws.
  double next_normal();

  // Substream for work item `index` of stream `seed`. Decorrelates streams by
  // scrambling the (seed, index) pair through the splitmix64 finalizer twice.
  static SeededRng substream(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t state_;
};

}  // namespace vlp
