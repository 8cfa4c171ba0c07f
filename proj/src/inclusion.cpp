#include "sbs/inclusion.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

#include "sbs/rng.hpp"

namespace sbs {

void InclusionConfig::validate() const {
  if (n < 4) throw std::invalid_argument("need n >= 4");
  const std::uint32_t q = 2 * max_faults(n) + 1;
  if (D < 1 || D > q) throw std::invalid_argument("D must lie in [1, 2f+1]");
  if (anchor_period < 1) throw std::invalid_argument("anchor_period must be positive");
  if (rounds <= tail_margin) throw std::invalid_argument("rounds must exceed tail_margin");
}

std::uint64_t InclusionHistogram::total() const {
  std::uint64_t t = censored;
  for (const auto& [k, c] : counts) t += c;
  return t;
}

double InclusionHistogram::fraction_at_most(std::uint32_t k) const {
  const std::uint64_t t = total();
  if (t == 0) return 0.0;
  std::uint64_t hit = 0;
  for (const auto& [lat, c] : counts)
    if (lat <= k) hit += c;
  return static_cast<double>(hit) / static_cast<double>(t);
}

void InclusionHistogram::merge(const InclusionHistogram& o) {
  for (const auto& [k, c] : o.counts) counts[k] += c;
  censored += o.censored;
}

InclusionHistogram simulate_inclusion(const InclusionConfig& cfg) {
  cfg.validate();
  const std::uint32_t n = cfg.n;
  const std::uint32_t q = 2 * max_faults(n) + 1;
  const Round R = cfg.rounds;
  auto leader = [&](Round r) -> std::int64_t {
    return r % cfg.anchor_period == 0 ? static_cast<std::int64_t>(r % n) : -1;
  };
  auto index = [n](Round r, std::uint32_t v) { return static_cast<std::size_t>(r - 1) * n + v; };

  // Parents of round r >= 2 vertices, flattened; round 1 links only genesis.
  std::vector<std::uint32_t> offset(static_cast<std::size_t>(R) * n + 1, 0);
  std::vector<std::uint32_t> parents;
  parents.reserve(static_cast<std::size_t>(R) * n * (cfg.D + 2));
  Rng rng(cfg.seed, Stream::inclusion, n);
  std::vector<std::uint32_t> all(n);
  for (std::uint32_t i = 0; i < n; ++i) all[i] = i;
  std::vector<std::uint8_t> picked(n);
  for (Round r = 1; r <= R; ++r) {
    const std::int64_t prev_leader = r >= 2 ? leader(r - 1) : -1;
    for (std::uint32_t v = 0; v < n; ++v) {
      if (r >= 2) {
        // Partial Fisher-Yates: first q entries are the quorum, first D of those the sample.
        for (std::uint32_t i = 0; i < q; ++i) std::swap(all[i], all[i + rng.below(n - i)]);
        std::fill(picked.begin(), picked.end(), 0);
        for (std::uint32_t i = 0; i < cfg.D; ++i) picked[all[i]] = 1;
        picked[v] = 1;
        if (prev_leader >= 0) {
          for (std::uint32_t i = 0; i < q; ++i)
            if (all[i] == static_cast<std::uint32_t>(prev_leader)) picked[all[i]] = 1;
        }
        for (std::uint32_t u = 0; u < n; ++u)
          if (picked[u]) parents.push_back(static_cast<std::uint32_t>(index(r - 1, u)));
      }
      offset[index(r, v) + 1] = static_cast<std::uint32_t>(parents.size());
    }
  }

  constexpr Round kNone = std::numeric_limits<Round>::max();
  std::vector<Round> included(static_cast<std::size_t>(R) * n, kNone);
  std::vector<std::uint32_t> stack;
  for (Round a = 1; a <= R; ++a) {
    const std::int64_t l = leader(a);
    if (l < 0) continue;
    const auto root = static_cast<std::uint32_t>(index(a, static_cast<std::uint32_t>(l)));
    if (included[root] != kNone) continue;
    included[root] = a;
    stack.assign(1, root);
    while (!stack.empty()) {
      const std::uint32_t x = stack.back();
      stack.pop_back();
      for (std::uint32_t i = offset[x]; i < offset[x + 1]; ++i) {
        const std::uint32_t p = parents[i];
        if (included[p] == kNone) {
          included[p] = a;
          stack.push_back(p);
        }
      }
    }
  }

  InclusionHistogram h;
  for (Round r = 1; r + cfg.tail_margin <= R; ++r) {
    for (std::uint32_t v = 0; v < n; ++v) {
      const Round a = included[index(r, v)];
      if (a == kNone) {
        ++h.censored;
      } else {
        ++h.counts[static_cast<std::uint32_t>(a - r)];
      }
    }
  }
  return h;
}

}  // namespace sbs
