#pragma once

#include <cmath>
#include <cstdint>

namespace mflab {

// Counter-based random streams. Every draw is a pure function of
// (seed, stream, step, slot), so the schedule of parallel execution cannot
// change the numbers: trajectories are bit-identical for any worker count.

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

struct CounterRng {
  std::uint64_t seed = 0;

  std::uint64_t bits(std::uint64_t stream, std::uint64_t step,
                     std::uint64_t slot) const {
    std::uint64_t h = detail::splitmix64(seed ^ 0x5851f42d4c957f2dULL);
    h = detail::splitmix64(h ^ stream);
    h = detail::splitmix64(h ^ step);
    h = detail::splitmix64(h ^ slot);
    return h;
  }

  /// Uniform in (0, 1).
  double uniform(std::uint64_t stream, std::uint64_t step,
                 std::uint64_t slot) const {
    return (bits(stream, step, slot) >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  /// Standard normal via Box-Muller (cosine branch).
  double normal(std::uint64_t stream, std::uint64_t step,
                std::uint64_t slot) const {
    const double u1 = uniform(stream, step, 2 * slot);
    const double u2 = uniform(stream, step, 2 * slot + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }
};

}  // namespace mflab
