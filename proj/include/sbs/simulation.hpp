#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <vector>

#include "sbs/broadcast.hpp"
#include "sbs/consensus.hpp"
#include "sbs/simnet.hpp"
#include "sbs/traffic.hpp"

namespace sbs {

struct SimulationConfig {
  ProtocolConfig protocol;
  NetConfig net;
  RbConfig rb;
  VcProofModel vc = VcProofModel::merkle;
  std::vector<Strategy> roster;  // one per validator; empty means all correct
  Round rounds = 20;             // run until every live correct validator reaches this round
  std::uint64_t seed = 1;
  double horizon_ms = 600'000.0;   // give up (Stalled) past this simulated time
  double drain_min_ms = -1.0;      // after reaching `rounds`; < 0 means protocol.delta_ms
  double drain_max_ms = 60'000.0;  // stop draining even if broadcasts are still in flight
  bool retain_events = false;
  std::ostream* event_stream = nullptr;
  bool record_schedule = false;
};

/// One r_deliver as seen by a validator, in delivery order.
struct ScheduledDelivery {
  Time at = 0;
  std::uint32_t sender = 0;
  Round seq = 0;
  VertexPtr vertex;
};

/// A full run: network, broadcast layer, traffic ledger and n validators.
class Simulation {
 public:
  explicit Simulation(SimulationConfig cfg);
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Throws Stalled if the correct validators cannot reach `rounds`.
  void run();

  [[nodiscard]] const SimulationConfig& config() const { return cfg_; }
  [[nodiscard]] const Simulator& sim() const { return *sim_; }
  [[nodiscard]] const ReliableBroadcast& rb() const { return *rb_; }
  [[nodiscard]] const TrafficLedger& ledger() const { return ledger_; }
  [[nodiscard]] const Validator& validator(std::uint32_t v) const { return *validators_[v]; }
  [[nodiscard]] std::uint32_t n() const { return cfg_.protocol.n; }
  [[nodiscard]] bool is_correct(std::uint32_t v) const { return cfg_.roster[v].correct(); }
  [[nodiscard]] std::vector<std::uint32_t> correct_validators() const;
  /// Time the last correct validator entered `rounds`.
  [[nodiscard]] Time reached_at() const { return reached_at_; }
  [[nodiscard]] Time ended_at() const { return ended_at_; }
  [[nodiscard]] const std::vector<ScheduledDelivery>& schedule(std::uint32_t v) const { return schedules_[v]; }

 private:
  bool all_reached() const;
  bool broadcasts_settled() const;

  SimulationConfig cfg_;
  TrafficLedger ledger_;
  ValidationCache cache_;
  std::unique_ptr<Simulator> sim_;
  std::unique_ptr<ReliableBroadcast> rb_;
  std::vector<std::unique_ptr<Validator>> validators_;
  std::vector<std::vector<ScheduledDelivery>> schedules_;
  Time reached_at_ = -1;
  Time ended_at_ = -1;
};

}  // namespace sbs
