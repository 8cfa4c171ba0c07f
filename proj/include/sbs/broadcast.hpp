#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "sbs/dag.hpp"
#include "sbs/simnet.hpp"
#include "sbs/traffic.hpp"

namespace sbs {

struct RbConfig {
  bool ideal = false;              // direct delivery, no echoes or certificates
  std::uint32_t pull_fanout = 3;   // holders asked per pull attempt
  double pull_wait_ms = 200.0;     // grace before pulling a certified payload
  double pull_retry_ms = 400.0;
  double cert_wait_ms = 1500.0;    // echoers without a certificate start asking peers
};

/// Faulty-sender scripts for exercising the broadcast layer directly.
enum class SenderFault {
  none,
  equivocate_split,  // payload a to the lower half of peers, b to the upper half
  cert_to_first_k,   // certificate sent only to the first k peers in id order
  payload_to_first_k,
};

/// Certificate metadata. Signatures are modeled: a certificate is a digest
/// plus the set of 2f+1 echoers, charged at certificate_size() on the wire.
struct Certificate {
  VertexId id{};
  std::vector<std::uint32_t> signers;
};

/// Signed-echo consistent broadcast with randomized pulling, for all n
/// simulated nodes of one run. seq is the vertex round.
class ReliableBroadcast {
 public:
  using DeliverFn = std::function<void(std::uint32_t node, std::uint32_t sender, Round seq, const VertexPtr& v)>;

  ReliableBroadcast(Simulator& sim, TrafficLedger& ledger, const WireModel& wire, const RbConfig& cfg,
                    std::uint64_t seed, DeliverFn deliver);

  void broadcast(std::uint32_t sender, const VertexPtr& v);
  /// Test hook: broadcast with a scripted sender fault. `b` is only used by
  /// equivocate_split.
  void broadcast_faulty(std::uint32_t sender, const VertexPtr& a, const VertexPtr& b, SenderFault fault,
                        std::uint32_t k);

  /// Inactive nodes drop every message and never send (crash / silent).
  void set_active(std::uint32_t node, bool active) { active_[node] = active; }
  [[nodiscard]] bool active(std::uint32_t node) const { return active_[node]; }

  /// A delivered vertex referenced (sender, seq, id) through a certified
  /// edge; fetch it if missing, asking `hint` first.
  void learn_certificate(std::uint32_t node, std::uint32_t sender, Round seq, const VertexId& id, std::uint32_t hint);

  [[nodiscard]] std::optional<VertexId> delivered(std::uint32_t node, std::uint32_t sender, Round seq) const;
  [[nodiscard]] Time delivered_at(std::uint32_t node, std::uint32_t sender, Round seq) const;
  /// Every (sender, seq) some node has delivered, with the id it got.
  void for_each_delivery(const std::function<void(std::uint32_t node, std::uint32_t sender, Round seq,
                                                  const VertexId& id, Time at)>& fn) const;
  /// Senders' own broadcast calls (seq -> id), for validity checks.
  [[nodiscard]] const std::map<std::pair<std::uint32_t, Round>, std::pair<VertexId, Time>>& broadcasts() const {
    return broadcasts_;
  }
  [[nodiscard]] std::uint64_t messages() const { return messages_; }
  [[nodiscard]] std::uint32_t n() const { return n_; }

 private:
  struct Inst {
    VertexPtr payload;                        // the payload matching `cert`, else the first one seen
    std::shared_ptr<const Certificate> cert;  // first certificate wins
    Time delivered_at = -1;
    bool echoed = false;
    bool pulling = false;
    bool querying = false;
  };
  struct Tally {
    std::map<VertexId, std::vector<std::uint32_t>> echoes;
    bool certified = false;
    SenderFault fault = SenderFault::none;
    std::uint32_t k = 0;
  };

  Inst& inst(std::uint32_t node, std::uint32_t sender, Round seq);
  const Inst* find(std::uint32_t node, std::uint32_t sender, Round seq) const;

  void send_payload(std::uint32_t from, std::uint32_t to, std::uint32_t sender, const VertexPtr& v, bool pull_reply);
  void send_echo(std::uint32_t from, std::uint32_t sender, Round seq, const VertexId& id);
  void send_cert(std::uint32_t from, std::uint32_t to, std::uint32_t sender, Round seq,
                 const std::shared_ptr<const Certificate>& c);

  void on_payload(std::uint32_t node, std::uint32_t from, std::uint32_t sender, const VertexPtr& v);
  void on_echo(std::uint32_t sender, std::uint32_t echoer, Round seq, const VertexId& id);
  void on_cert(std::uint32_t node, std::uint32_t from, std::uint32_t sender, Round seq,
               const std::shared_ptr<const Certificate>& c, bool relay);
  void on_pull_request(std::uint32_t node, std::uint32_t from, std::uint32_t sender, Round seq, const VertexId& id);
  void on_query(std::uint32_t node, std::uint32_t from, std::uint32_t sender, Round seq);

  void try_deliver(std::uint32_t node, std::uint32_t sender, Round seq);
  void start_pull(std::uint32_t node, std::uint32_t sender, Round seq, std::uint32_t hint);
  void pull_step(std::uint32_t node, std::uint32_t sender, Round seq, std::shared_ptr<std::vector<std::uint32_t>> order,
                 std::size_t next);
  void query_step(std::uint32_t node, std::uint32_t sender, Round seq, std::shared_ptr<std::vector<std::uint32_t>> order,
                  std::size_t next);
  void record(std::uint32_t from, Round seq, TrafficCategory cat, std::uint64_t bytes);

  Simulator& sim_;
  TrafficLedger& ledger_;
  WireModel wire_;
  RbConfig cfg_;
  std::uint32_t n_;
  std::uint32_t quorum_;
  DeliverFn deliver_;
  std::vector<bool> active_;
  std::vector<Rng> rng_;
  std::vector<std::vector<Inst>> state_;  // state_[node][seq * n + sender]
  std::map<std::pair<std::uint32_t, Round>, Tally> tallies_;
  std::map<std::pair<std::uint32_t, Round>, std::pair<VertexId, Time>> broadcasts_;
  std::uint64_t messages_ = 0;
  std::size_t echo_size_, cert_size_, query_size_, pull_req_size_;
};

}  // namespace sbs
