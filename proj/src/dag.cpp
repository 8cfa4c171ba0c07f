#include "sbs/dag.hpp"

#include <algorithm>
#include <string>

#include "sbs/bytes.hpp"

namespace sbs {
namespace {

VertexId compute_id(Round round, std::uint32_t source, const std::vector<std::uint8_t>& block,
                    const std::vector<Edge>& edges, const std::optional<SamplingProof>& proof) {
  ByteWriter w;
  w.u64(round);
  w.u32(source);
  w.bytes(block);
  w.u32(static_cast<std::uint32_t>(edges.size()));
  for (const auto& e : edges) {
    w.u32(e.source);
    w.digest(e.id);
  }
  w.u8(proof ? 1 : 0);
  if (proof) encode(w, *proof);
  return Hasher(HashDomain::vertex).update(w.data()).finish();
}

void set_bit(std::vector<std::uint64_t>& bits, std::size_t k) {
  if (bits.size() <= k / 64) bits.resize(k / 64 + 1, 0);
  bits[k / 64] |= std::uint64_t{1} << (k % 64);
}

void or_into(std::vector<std::uint64_t>& dst, const std::vector<std::uint64_t>& src) {
  if (dst.size() < src.size()) dst.resize(src.size(), 0);
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] |= src[i];
}

}  // namespace

Vertex::Vertex(Round round, std::uint32_t source, std::vector<std::uint8_t> block, std::vector<Edge> edges,
               std::optional<SamplingProof> proof)
    : round_(round), source_(source), block_(std::move(block)), edges_(std::move(edges)), proof_(std::move(proof)) {
  std::sort(edges_.begin(), edges_.end());
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i].source == edges_[i - 1].source) {
      throw DagError(DagError::Code::malformed, "two edges to source " + std::to_string(edges_[i].source));
    }
  }
  id_ = compute_id(round_, source_, block_, edges_, proof_);
}

Vertex Vertex::genesis(std::uint32_t source) { return Vertex(0, source, {}, {}); }

bool Vertex::has_edge(const VertexId& target) const {
  return std::any_of(edges_.begin(), edges_.end(), [&](const Edge& e) { return e.id == target; });
}

const Edge* Vertex::edge_from(std::uint32_t source) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), source,
                             [](const Edge& e, std::uint32_t s) { return e.source < s; });
  return (it != edges_.end() && it->source == source) ? &*it : nullptr;
}

DagStore::DagStore(std::uint32_t n) : n_(n), f_(max_faults(n)) {
  if (n < 1) throw std::invalid_argument("DagStore needs n >= 1");
  rounds_.emplace_back(n);
  reach_.emplace_back(n);
  round_sizes_.push_back(n);
  votes_.push_back(0);
  for (std::uint32_t k = 0; k < n; ++k) {
    auto g = std::make_shared<const Vertex>(Vertex::genesis(k));
    index_.emplace(g->id(), std::make_pair(Round{0}, k));
    rounds_[0][k] = std::move(g);
  }
}

const Vertex* DagStore::slot(Round r, std::uint32_t source) const {
  if (r >= rounds_.size() || source >= n_) return nullptr;
  return rounds_[r][source].get();
}

bool DagStore::parents_present(const Vertex& v) const {
  if (v.round() == 0) return false;
  for (const auto& e : v.edges()) {
    const Vertex* p = slot(v.round() - 1, e.source);
    if (!p || p->id() != e.id) return false;
  }
  return true;
}

void DagStore::add_vertex(VertexPtr v) {
  if (v->round() == 0 || v->source() >= n_) {
    throw DagError(DagError::Code::malformed, "vertex outside the round/source range");
  }
  const Round r = v->round();
  if (slot(r, v->source())) {
    throw DagError(DagError::Code::duplicate_slot,
                   "slot (" + std::to_string(r) + ", " + std::to_string(v->source()) + ") already filled");
  }
  for (const auto& e : v->edges()) {
    if (e.source >= n_) throw DagError(DagError::Code::invalid_edge, "edge source out of range");
    const Vertex* p = slot(r - 1, e.source);
    if (!p) throw DagError(DagError::Code::missing_parents, "parent not present");
    if (p->id() != e.id) throw DagError(DagError::Code::invalid_edge, "edge does not match the parent slot");
  }

  if (rounds_.size() <= r) {
    rounds_.resize(r + 1, std::vector<VertexPtr>(n_));
    reach_.resize(r + 1, std::vector<std::vector<std::uint64_t>>(n_));
    round_sizes_.resize(r + 1, 0);
    votes_.resize(r + 1, 0);
  }
  auto& bits = reach_[r][v->source()];
  for (const auto& e : v->edges()) or_into(bits, reach_[r - 1][e.source]);
  if (is_anchor_round(r) && v->source() == anchor_source(r, n_)) set_bit(bits, r / 2);

  const Round prev = r - 1;
  if (is_anchor_round(prev)) {
    const Vertex* a = slot(prev, anchor_source(prev, n_));
    if (a && v->has_edge(a->id())) ++votes_[prev];
  }
  index_.emplace(v->id(), std::make_pair(r, v->source()));
  rounds_[r][v->source()] = std::move(v);
  ++round_sizes_[r];
}

VertexPtr DagStore::get(Round r, std::uint32_t source) const {
  if (r >= rounds_.size() || source >= n_) return nullptr;
  return rounds_[r][source];
}

VertexPtr DagStore::get(const VertexId& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : get(it->second.first, it->second.second);
}

std::span<const VertexPtr> DagStore::round(Round r) const {
  if (r >= rounds_.size()) return {};
  return rounds_[r];
}

std::uint32_t DagStore::round_size(Round r) const { return r < round_sizes_.size() ? round_sizes_[r] : 0; }

VertexPtr DagStore::get_anchor(Round r) const {
  if (!is_anchor_round(r)) return nullptr;
  return get(r, anchor_source(r, n_));
}

std::uint32_t DagStore::anchor_votes(Round r) const {
  if (!is_anchor_round(r) || r >= votes_.size()) return 0;
  return votes_[r];
}

bool DagStore::reaches_anchor(const Vertex& from, Round r) const {
  if (!is_anchor_round(r)) return false;
  const Vertex* s = slot(from.round(), from.source());
  if (!s || s->id() != from.id()) return false;
  const auto& bits = reach_[from.round()][from.source()];
  const std::size_t k = r / 2;
  return k / 64 < bits.size() && ((bits[k / 64] >> (k % 64)) & 1u);
}

bool DagStore::path_exists(const Vertex& from, const Vertex& to) const {
  if (to.round() > from.round()) return false;
  if (to.round() == from.round()) return to.id() == from.id();
  if (is_anchor_round(to.round()) && to.source() == anchor_source(to.round(), n_) && contains(to.id())) {
    return reaches_anchor(from, to.round());
  }
  // Level-synchronous reverse BFS, never descending below `to`.
  std::vector<char> frontier(n_, 0), next(n_, 0);
  frontier[from.source()] = 1;
  for (Round r = from.round(); r > to.round(); --r) {
    std::fill(next.begin(), next.end(), 0);
    bool any = false;
    for (std::uint32_t k = 0; k < n_; ++k) {
      if (!frontier[k]) continue;
      for (const auto& e : rounds_[r][k]->edges()) {
        next[e.source] = 1;
        any = true;
      }
    }
    if (!any) return false;
    std::swap(frontier, next);
  }
  const Vertex* t = slot(to.round(), to.source());
  return frontier[to.source()] && t && t->id() == to.id();
}

std::vector<VertexPtr> DagStore::causal_past(const Vertex& v) const {
  return causal_past_until(v, [](const Vertex&) { return false; });
}

std::vector<VertexPtr> DagStore::causal_past_until(const Vertex& v,
                                                   const std::function<bool(const Vertex&)>& stop) const {
  std::vector<VertexPtr> out;
  const Vertex* start = slot(v.round(), v.source());
  if (!start || start->id() != v.id() || stop(v)) return out;
  std::vector<char> frontier(n_, 0), next(n_, 0);
  frontier[v.source()] = 1;
  std::vector<std::vector<VertexPtr>> levels;
  for (Round r = v.round() + 1; r-- > 0;) {
    std::vector<VertexPtr> level;
    std::fill(next.begin(), next.end(), 0);
    bool any = false;
    for (std::uint32_t k = 0; k < n_; ++k) {
      if (!frontier[k]) continue;
      const VertexPtr& u = rounds_[r][k];
      level.push_back(u);
      for (const auto& e : u->edges()) {
        if (next[e.source]) continue;
        if (stop(*rounds_[r - 1][e.source])) continue;
        next[e.source] = 1;
        any = true;
      }
    }
    levels.push_back(std::move(level));
    if (!any) break;
    std::swap(frontier, next);
  }
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    out.insert(out.end(), it->begin(), it->end());
  }
  return out;
}

bool check_menacing(const DagStore& dag, std::uint32_t threshold) {
  std::vector<VertexPtr> anchors;
  for (Round r = 2; r <= dag.highest_round(); r += 2) {
    if (auto a = dag.get_anchor(r)) anchors.push_back(std::move(a));
  }
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (dag.anchor_votes(anchors[i]->round()) < threshold) continue;
    for (std::size_t j = i + 1; j < anchors.size(); ++j) {
      if (!dag.path_exists(*anchors[j], *anchors[i])) return true;
    }
  }
  return false;
}

}  // namespace sbs
