#pragma once

#include <cmath>
#include <cstdint>

namespace qkt {

// Counter-based generator built on splitmix64.  Every instance in a suite
// draws from an independent stream keyed by (seed, stream), so results do not
// depend on evaluation order and replay is exact.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64(seed ^ splitmix64(stream))) {}

  std::uint64_t next_u64() { return splitmix64(key_ + (++ctr_)); }

  // uniform in [0, 1)
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [-a, a]
  double sym(double a) { return a * (2.0 * u01() - 1.0); }

  // uniform in {0, ..., n-1}
  int below(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  bool coin() { return (next_u64() & 1u) != 0; }

  // uniform angle in [-pi, pi]
  double angle() { return sym(3.14159265358979323846); }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace qkt
