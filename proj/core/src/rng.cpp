#include "vlp/rng.hpp"

#include <cmath>
#include <numbers>

namespace vlp {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

double SeededRng::next_normal() {
  const double u1 = next_open_closed();
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SeededRng SeededRng::substream(std::uint64_t seed, std::uint64_t index) {
  return SeededRng(mix64(mix64(seed + 0x9E3779B97F4A7C15ULL) ^ index));
}

}  // namespace vlp
