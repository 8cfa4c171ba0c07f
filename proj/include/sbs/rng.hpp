#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace sbs {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Draw sites. Each (seed, purpose, owner) triple gets an independent stream,
/// so adding a draw in one place never shifts another stream.
enum class Stream : std::uint64_t {
  latency = 1,
  adversary = 2,
  broadcast = 3,
  byzantine = 4,
  inclusion = 5,
  roster = 6,
  test = 7,
};

/// Counter-based generator: output i is splitmix64(key + i * gamma). Platform
/// independent, unlike the standard distributions.
class Rng {
 public:
  Rng(std::uint64_t seed, Stream purpose, std::uint64_t owner = 0)
      : key_(splitmix64(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(purpose) << 32 ^ owner))) {}

  std::uint64_t next() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, bound), unbiased.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

  /// Box-Muller; one draw per call keeps the stream position predictable.
  double normal(double mean, double sd) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[below(i)]);
  }

  /// k distinct values from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::uint32_t> sample(std::uint32_t n, std::uint32_t k) {
    std::vector<std::uint32_t> pool(n);
    for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
    if (k > n) k = n;
    for (std::uint32_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + below(n - i)]);
    pool.resize(k);
    return pool;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace sbs
