#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sbs/alba.hpp"
#include "sbs/dag.hpp"
#include "sbs/rng.hpp"
#include "sbs/simnet.hpp"
#include "sbs/traffic.hpp"

namespace sbs {

struct ProtocolConfig {
  Variant variant = Variant::sparse;
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  std::uint32_t D = 8;
  std::uint32_t lambda = 128;
  std::uint32_t lambda_complete = 20;  // proof search failure budget 2^-lambda_complete
  double timeout_ms = 3600.0;
  double delta_ms = 1800.0;  // bound on reliable-broadcast delivery after GST
  double gst_ms = 0.0;
  CryptoScheme scheme = CryptoScheme::threshold;
  std::size_t payload_bytes = 0;

  /// Throws std::invalid_argument.
  void validate() const;
  [[nodiscard]] std::uint32_t quorum() const { return 2 * f + 1; }
  [[nodiscard]] AlbaParams alba() const;
};

std::uint32_t direct_commit_threshold(Variant variant, std::uint32_t f);

enum class StrategyKind { correct, crash, silent, anchor_avoider, grinder };

struct Strategy {
  StrategyKind kind = StrategyKind::correct;
  Round crash_round = 0;           // crash: stop on reaching this round
  std::uint32_t attempts = 100;    // grinder: subsets tried per vertex

  [[nodiscard]] bool correct() const { return kind == StrategyKind::correct; }
  /// "correct", "crash(7)", "silent", "anchor-avoider", "grinder(100)".
  static Strategy parse(const std::string& s);
  [[nodiscard]] std::string to_string() const;
  friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// Memo of sampling-proof checks, shared by every validator of one run
/// (the check is a pure function of the vertex).
class ValidationCache {
 public:
  std::optional<bool> get(const VertexId& id) const;
  void put(const VertexId& id, bool ok) { memo_.emplace(id, ok); }

 private:
  std::unordered_map<VertexId, bool, DigestHash> memo_;
};

bool validate_vertex(const Vertex& v, Round round, std::uint32_t k, const ProtocolConfig& cfg, const AlbaParams& alba,
                     ValidationCache* cache = nullptr);

struct DeliveredEntry {
  std::uint32_t source = 0;
  Round round = 0;
  VertexId id{};
  friend bool operator==(const DeliveredEntry&, const DeliveredEntry&) = default;
};

struct CommittedAnchor {
  Round round = 0;
  VertexId id{};
  bool direct = false;
  Time at = 0;
};

/// Bullshark validator state machine; variant-specific behavior is selected by
/// ProtocolConfig::variant and Byzantine behavior by Strategy.
class Validator {
 public:
  struct Hooks {
    std::function<Time()> now;
    std::function<void(const VertexPtr&)> broadcast;
    std::function<void(Time)> set_timer;
    /// A buffered vertex names a parent this validator lacks.
    std::function<void(std::uint32_t source, Round round, const VertexId& id, std::uint32_t hint)> missing_parent;
    std::function<void()> crashed;
  };

  Validator(std::uint32_t id, const ProtocolConfig& cfg, const Strategy& strategy, Hooks hooks,
            ValidationCache* cache, std::uint64_t seed);

  /// Enters round 1 and broadcasts the first vertex.
  void start();
  /// r_deliver(v, seq, sender).
  void on_deliver(std::uint32_t sender, Round seq, const VertexPtr& v);
  void on_timer();

  [[nodiscard]] bool may_advance_round() const;

  [[nodiscard]] std::uint32_t id() const { return id_; }
  [[nodiscard]] const Strategy& strategy() const { return strategy_; }
  [[nodiscard]] bool crashed() const { return crashed_; }
  [[nodiscard]] Round current_round() const { return round_; }
  [[nodiscard]] const DagStore& dag() const { return dag_; }
  [[nodiscard]] const std::vector<DeliveredEntry>& log() const { return log_; }
  [[nodiscard]] const std::vector<Time>& log_times() const { return log_times_; }
  /// Round of the anchor whose history delivered each log entry.
  [[nodiscard]] const std::vector<Round>& log_anchor_rounds() const { return log_anchors_; }
  [[nodiscard]] const std::vector<CommittedAnchor>& committed() const { return committed_; }
  [[nodiscard]] Round last_ordered_round() const { return last_ordered_; }
  /// Time this validator first entered round r, or -1.
  [[nodiscard]] Time round_entered(Round r) const { return r < entered_.size() ? entered_[r] : -1; }
  /// Time this validator broadcast its round-r vertex, or -1.
  [[nodiscard]] Time broadcast_time(Round r) const { return r < sent_.size() ? sent_[r] : -1; }
  /// (round, broadcast-to-ordering latency) of each own ordered vertex.
  [[nodiscard]] const std::vector<std::pair<Round, Time>>& commit_latencies() const { return latencies_; }
  [[nodiscard]] std::uint64_t menacing_events() const { return menacing_; }
  [[nodiscard]] std::uint64_t rejected() const { return rejected_; }
  [[nodiscard]] std::uint64_t sampling_failures() const { return sampling_failures_; }
  [[nodiscard]] std::size_t buffered() const { return buffer_.size(); }

 private:
  void process();
  void advance();
  bool enter_round(Round r);
  std::optional<Vertex> create_vertex(Round r);
  std::vector<Edge> sparse_edges(Round r, std::vector<Digest> leaves, const VertexPtr& anchor, bool link_anchor,
                                 std::optional<SamplingProof>& proof);
  std::optional<Vertex> create_grinding(Round r);
  void try_committing(const Vertex& v);
  void order_anchors(const VertexPtr& anchor);
  void order_history();
  void watch_menace(const Vertex& v);
  void reset_timer();

  std::uint32_t id_;
  ProtocolConfig cfg_;
  AlbaParams alba_;
  Strategy strategy_;
  Hooks hooks_;
  ValidationCache* cache_;
  Rng rng_;
  DagStore dag_;
  std::map<std::pair<Round, std::uint32_t>, VertexPtr> buffer_;
  std::unordered_set<VertexId, DigestHash> requested_;
  Round round_ = 0;
  Time deadline_ = 0;
  bool crashed_ = false;
  bool started_ = false;

  std::unordered_set<VertexId, DigestHash> ordered_;
  Round last_ordered_ = 0;
  std::vector<VertexPtr> stack_;
  std::vector<DeliveredEntry> log_;
  std::vector<Time> log_times_;
  std::vector<Round> log_anchors_;
  std::vector<CommittedAnchor> committed_;
  std::vector<Time> entered_;
  std::vector<Time> sent_;
  std::vector<std::pair<Round, Time>> latencies_;
  std::vector<Round> voted_anchors_;  // anchors whose votes reached the commit threshold
  std::uint64_t menacing_ = 0;
  std::uint64_t rejected_ = 0;
  std::uint64_t sampling_failures_ = 0;
};

}  // namespace sbs
