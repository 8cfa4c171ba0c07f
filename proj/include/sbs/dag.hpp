#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "sbs/hash.hpp"
#include "sbs/sampling.hpp"

namespace sbs {

using VertexId = Digest;
using Round = std::uint64_t;

inline std::uint32_t max_faults(std::uint32_t n) { return n == 0 ? 0 : (n - 1) / 3; }
inline bool is_anchor_round(Round r) { return r >= 2 && r % 2 == 0; }
inline std::uint32_t anchor_source(Round r, std::uint32_t n) { return static_cast<std::uint32_t>((r / 2) % n); }

struct Edge {
  std::uint32_t source = 0;
  VertexId id{};

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

class DagError : public std::runtime_error {
 public:
  enum class Code { missing_parents, duplicate_slot, invalid_edge, malformed };
  DagError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] Code code() const { return code_; }

 private:
  Code code_;
};

/// Immutable DAG node. Edges are kept sorted by source; the id is the hash
/// of the canonical serialization and is computed once at construction.
class Vertex {
 public:
  Vertex(Round round, std::uint32_t source, std::vector<std::uint8_t> block, std::vector<Edge> edges,
         std::optional<SamplingProof> proof = std::nullopt);

  static Vertex genesis(std::uint32_t source);

  [[nodiscard]] Round round() const { return round_; }
  [[nodiscard]] std::uint32_t source() const { return source_; }
  [[nodiscard]] const std::vector<std::uint8_t>& block() const { return block_; }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] const std::optional<SamplingProof>& proof() const { return proof_; }
  [[nodiscard]] const VertexId& id() const { return id_; }

  [[nodiscard]] bool has_edge(const VertexId& target) const;
  [[nodiscard]] const Edge* edge_from(std::uint32_t source) const;

 private:
  Round round_;
  std::uint32_t source_;
  std::vector<std::uint8_t> block_;
  std::vector<Edge> edges_;
  std::optional<SamplingProof> proof_;
  VertexId id_;
};

using VertexPtr = std::shared_ptr<const Vertex>;

/// One validator's local DAG. Round 0 holds n synthetic genesis vertices.
class DagStore {
 public:
  explicit DagStore(std::uint32_t n);

  [[nodiscard]] std::uint32_t n() const { return n_; }
  [[nodiscard]] std::uint32_t f() const { return f_; }
  [[nodiscard]] std::uint32_t quorum() const { return 2 * f_ + 1; }

  [[nodiscard]] bool parents_present(const Vertex& v) const;
  /// Throws DagError; see DagError::Code.
  void add_vertex(VertexPtr v);

  [[nodiscard]] VertexPtr get(Round r, std::uint32_t source) const;
  [[nodiscard]] VertexPtr get(const VertexId& id) const;
  [[nodiscard]] bool contains(const VertexId& id) const { return index_.count(id) != 0; }
  [[nodiscard]] bool contains(Round r, std::uint32_t source) const { return get(r, source) != nullptr; }

  /// n slots, null where absent; empty span for rounds never touched.
  [[nodiscard]] std::span<const VertexPtr> round(Round r) const;
  [[nodiscard]] std::uint32_t round_size(Round r) const;
  [[nodiscard]] Round highest_round() const { return rounds_.empty() ? 0 : rounds_.size() - 1; }
  [[nodiscard]] std::size_t size() const { return index_.size(); }

  /// nullptr for odd rounds or an empty leader slot.
  [[nodiscard]] VertexPtr get_anchor(Round r) const;
  /// Number of round r+1 vertices with an edge to get_anchor(r).
  [[nodiscard]] std::uint32_t anchor_votes(Round r) const;

  [[nodiscard]] bool path_exists(const Vertex& from, const Vertex& to) const;
  /// O(1): whether the anchor of round r is in the causal past of `from`.
  [[nodiscard]] bool reaches_anchor(const Vertex& from, Round r) const;
  /// Everything reachable from v, including v and genesis, in (round, source) order.
  [[nodiscard]] std::vector<VertexPtr> causal_past(const Vertex& v) const;
  /// Like causal_past but does not enter (or return) vertices for which
  /// `stop` is true.
  [[nodiscard]] std::vector<VertexPtr> causal_past_until(const Vertex& v,
                                                         const std::function<bool(const Vertex&)>& stop) const;

 private:
  const Vertex* slot(Round r, std::uint32_t source) const;

  std::uint32_t n_;
  std::uint32_t f_;
  std::vector<std::vector<VertexPtr>> rounds_;
  // reach_[r][k] bit j set iff the anchor of round 2j is in the past of slot (r, k)
  std::vector<std::vector<std::vector<std::uint64_t>>> reach_;
  std::vector<std::uint32_t> round_sizes_;
  std::vector<std::uint32_t> votes_;  // indexed by anchor round
  std::unordered_map<VertexId, std::pair<Round, std::uint32_t>, DigestHash> index_;
};

/// Safety witness: an anchor with at least `threshold` next-round references
/// that some later anchor cannot reach.
bool check_menacing(const DagStore& dag, std::uint32_t threshold);

}  // namespace sbs
