#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "sbs/consensus.hpp"

namespace sbs {

class Simulation;

struct AuditReport {
  bool prefix_agreement = true;
  bool no_duplicates = true;
  bool no_menace = true;
  bool anchors_monotone = true;
  bool rb_integrity = true;
  bool rb_validity = true;
  bool rb_agreement = true;
  bool liveness = true;
  bool conservation = true;
  std::uint64_t menacing_events = 0;
  std::uint64_t post_gst_anchors = 0;  // anchors the liveness check covered
  std::uint64_t direct_commits = 0;    // of those, directly committed everywhere
  std::vector<std::string> failures;

  [[nodiscard]] bool ok() const {
    return prefix_agreement && no_duplicates && no_menace && anchors_monotone && rb_integrity && rb_validity &&
           rb_agreement && liveness && conservation;
  }
  [[nodiscard]] std::string summary() const;
};

/// Every pair of logs agrees on their common prefix.
bool logs_prefix_consistent(const std::vector<const std::vector<DeliveredEntry>*>& logs);
/// No vertex id or (source, round) slot appears twice.
bool log_duplicate_free(const std::vector<DeliveredEntry>& log);

/// Runs every invariant check over a finished simulation.
AuditReport audit_simulation(const Simulation& s);

struct EventLogAudit {
  std::uint64_t events = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t bytes = 0;
  std::uint64_t late_after_gst = 0;  // only counted when gst/delta are given
  std::vector<std::string> failures;
  [[nodiscard]] bool ok() const { return failures.empty(); }
};

/// Structural checks of an NDJSON event log: time order, causality of each
/// send, per-sender FIFO egress and (optionally) the post-GST delay bound.
EventLogAudit audit_event_log(std::istream& in, double gst_ms = -1.0, double delta_ms = -1.0);

}  // namespace sbs
