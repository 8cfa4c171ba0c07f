#pragma once

#include <cstdint>
#include <map>

#include "sbs/dag.hpp"

namespace sbs {

/// Graph-only model of a sparse DAG: every round, each node sees a fresh
/// uniform quorum of 2f+1 previous-round vertices, links D of them uniformly,
/// its own previous vertex, and the previous round's leader when that leader
/// is in its quorum.
struct InclusionConfig {
  std::uint32_t n = 1000;
  std::uint32_t D = 70;
  Round rounds = 200;
  std::uint64_t seed = 1;
  Round anchor_period = 1;  // a leader every `anchor_period` rounds
  Round tail_margin = 10;   // vertices of the last rounds are not measured

  void validate() const;
};

struct InclusionHistogram {
  std::map<std::uint32_t, std::uint64_t> counts;  // latency in rounds -> vertices
  std::uint64_t censored = 0;                      // measured but never reached by a leader

  [[nodiscard]] std::uint64_t total() const;
  /// Share of measured vertices (censored included) with latency <= k.
  [[nodiscard]] double fraction_at_most(std::uint32_t k) const;
  void merge(const InclusionHistogram& o);
};

InclusionHistogram simulate_inclusion(const InclusionConfig& cfg);

}  // namespace sbs
