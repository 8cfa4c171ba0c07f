#include "sbs/consensus.hpp"

#include <algorithm>
#include <regex>

#include "sbs/bytes.hpp"

namespace sbs {

void ProtocolConfig::validate() const {
  if (n < 4) throw std::invalid_argument("need n >= 4");
  if (f != max_faults(n)) throw std::invalid_argument("f must equal floor((n-1)/3)");
  if (n < 3 * f + 1) throw std::invalid_argument("need n >= 3f+1");
  if (lambda < 1) throw std::invalid_argument("lambda must be positive");
  if (variant == Variant::sparse && D < 1) throw std::invalid_argument("sample size D must be positive");
  if (delta_ms <= 0) throw std::invalid_argument("delta_ms must be positive");
  if (timeout_ms < 2 * delta_ms) throw std::invalid_argument("timeout_ms must be at least 2 * delta_ms");
  if (gst_ms < 0) throw std::invalid_argument("gst_ms must be non-negative");
}

AlbaParams ProtocolConfig::alba() const { return AlbaParams::for_chain_length(quorum(), f, D, lambda_complete); }

std::uint32_t direct_commit_threshold(Variant variant, std::uint32_t f) {
  return variant == Variant::baseline ? f + 1 : 2 * f + 1;
}

Strategy Strategy::parse(const std::string& s) {
  static const std::regex re(R"(^([a-z-]+)(?:\((\d+)\))?$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw std::invalid_argument("bad strategy '" + s + "'");
  const std::string name = m[1];
  const bool has_arg = m[2].matched;
  const std::uint64_t arg = has_arg ? std::stoull(m[2]) : 0;
  Strategy st;
  if (name == "correct" && !has_arg) {
    st.kind = StrategyKind::correct;
  } else if (name == "crash" && has_arg) {
    st.kind = StrategyKind::crash;
    st.crash_round = arg;
  } else if (name == "silent" && !has_arg) {
    st.kind = StrategyKind::silent;
  } else if (name == "anchor-avoider" && !has_arg) {
    st.kind = StrategyKind::anchor_avoider;
  } else if (name == "grinder") {
    st.kind = StrategyKind::grinder;
    st.attempts = has_arg ? static_cast<std::uint32_t>(arg) : 100;
    if (st.attempts < 1) throw std::invalid_argument("grinder needs at least one attempt");
  } else {
    throw std::invalid_argument("bad strategy '" + s + "'");
  }
  return st;
}

std::string Strategy::to_string() const {
  switch (kind) {
    case StrategyKind::correct: return "correct";
    case StrategyKind::crash: return "crash(" + std::to_string(crash_round) + ")";
    case StrategyKind::silent: return "silent";
    case StrategyKind::anchor_avoider: return "anchor-avoider";
    case StrategyKind::grinder: return "grinder(" + std::to_string(attempts) + ")";
  }
  return "?";
}

std::optional<bool> ValidationCache::get(const VertexId& id) const {
  auto it = memo_.find(id);
  if (it == memo_.end()) return std::nullopt;
  return it->second;
}

namespace {

bool sparse_edges_ok(const Vertex& v, const ProtocolConfig& cfg, const AlbaParams& alba) {
  const SamplingProof& proof = *v.proof();
  if (proof.commitment.size != cfg.n) return false;
  const Round prev = v.round() - 1;
  std::vector<std::pair<std::uint32_t, Digest>> sample;
  for (const auto& e : v.edges()) {
    auto it = proof.openings.find(e.source);
    if (it != proof.openings.end()) {
      if (it->second.value != e.id) return false;
      sample.emplace_back(e.source, e.id);
      continue;
    }
    // Unsampled edges may only be the self-parent and the previous anchor.
    const bool self = e.source == v.source();
    const bool anchor = is_anchor_round(prev) && e.source == anchor_source(prev, cfg.n);
    if (!self && !anchor) return false;
  }
  return validate_sample(sample, proof, alba);
}

}  // namespace

bool validate_vertex(const Vertex& v, Round round, std::uint32_t k, const ProtocolConfig& cfg, const AlbaParams& alba,
                     ValidationCache* cache) {
  if (v.source() != k || v.round() != round || round == 0 || k >= cfg.n) return false;
  for (const auto& e : v.edges()) {
    if (e.source >= cfg.n) return false;
  }
  if (cfg.variant == Variant::baseline) return !v.proof() && v.edges().size() >= cfg.quorum();

  if (!v.proof() || v.edges().size() > cfg.D + 2) return false;
  if (cache) {
    if (auto hit = cache->get(v.id())) return *hit;
  }
  const bool ok = sparse_edges_ok(v, cfg, alba);
  if (cache) cache->put(v.id(), ok);
  return ok;
}

Validator::Validator(std::uint32_t id, const ProtocolConfig& cfg, const Strategy& strategy, Hooks hooks,
                     ValidationCache* cache, std::uint64_t seed)
    : id_(id),
      cfg_(cfg),
      strategy_(strategy),
      hooks_(std::move(hooks)),
      cache_(cache),
      rng_(seed, Stream::byzantine, id),
      dag_(cfg.n) {
  cfg_.validate();
  if (cfg_.variant == Variant::sparse) alba_ = cfg_.alba();
  for (const auto& g : dag_.round(0)) ordered_.insert(g->id());
}

void Validator::start() {
  if (started_ || strategy_.kind == StrategyKind::silent) return;
  started_ = true;
  entered_.assign(1, hooks_.now());
  enter_round(1);
}

void Validator::reset_timer() {
  deadline_ = hooks_.now() + from_ms(cfg_.timeout_ms);
  hooks_.set_timer(deadline_);
}

bool Validator::may_advance_round() const {
  if (!started_ || crashed_ || round_ == 0) return false;
  if (dag_.round_size(round_) < cfg_.quorum()) return false;
  if (hooks_.now() >= deadline_) return true;
  if (round_ % 2 == 0) return dag_.get_anchor(round_) != nullptr;
  // Odd round: decided by the previous anchor's votes. With that anchor
  // missing locally only the timer can move us on.
  if (!is_anchor_round(round_ - 1)) return true;
  if (!dag_.get_anchor(round_ - 1)) return false;
  const std::uint32_t votes = dag_.anchor_votes(round_ - 1);
  const std::uint32_t others = dag_.round_size(round_) - votes;
  return votes >= cfg_.quorum() || others >= cfg_.f + 1;
}

bool Validator::enter_round(Round r) {
  if (strategy_.kind == StrategyKind::crash && r >= strategy_.crash_round) {
    crashed_ = true;
    if (hooks_.crashed) hooks_.crashed();
    return false;
  }
  auto v = create_vertex(r);
  if (!v) {
    ++sampling_failures_;
    return false;
  }
  const Time now = hooks_.now();
  round_ = r;
  if (entered_.size() <= r) entered_.resize(r + 1, -1);
  entered_[r] = now;
  if (sent_.size() <= r) sent_.resize(r + 1, -1);
  sent_[r] = now;
  hooks_.broadcast(std::make_shared<const Vertex>(std::move(*v)));
  reset_timer();
  return true;
}

void Validator::advance() {
  while (may_advance_round()) {
    if (!enter_round(round_ + 1)) break;
  }
}

std::vector<Edge> Validator::sparse_edges(Round r, std::vector<Digest> leaves, const VertexPtr& anchor,
                                          bool link_anchor, std::optional<SamplingProof>& proof) {
  Sample s = verifiably_sample(leaves, cfg_.quorum(), alba_);
  std::vector<Edge> edges;
  for (auto src : s.sources) edges.push_back({src, leaves[src]});
  auto has = [&](std::uint32_t src) {
    return std::any_of(edges.begin(), edges.end(), [&](const Edge& e) { return e.source == src; });
  };
  if (auto self = dag_.get(r - 1, id_); self && !has(id_)) edges.push_back({id_, self->id()});
  if (link_anchor && anchor && !has(anchor->source())) edges.push_back({anchor->source(), anchor->id()});
  proof = std::move(s.proof);
  return edges;
}

std::optional<Vertex> Validator::create_vertex(Round r) {
  ByteWriter block;
  block.u64(r);
  const auto prev = dag_.round(r - 1);
  const VertexPtr anchor = dag_.get_anchor(r - 1);
  const std::uint32_t present = dag_.round_size(r - 1);
  const bool avoid = strategy_.kind == StrategyKind::anchor_avoider && anchor && present - 1 >= cfg_.quorum();

  if (strategy_.kind == StrategyKind::grinder) return create_grinding(r);

  if (cfg_.variant == Variant::baseline) {
    std::vector<Edge> edges;
    for (const auto& p : prev) {
      if (p && !(avoid && p == anchor)) edges.push_back({p->source(), p->id()});
    }
    if (edges.size() < cfg_.quorum()) return std::nullopt;
    return Vertex(r, id_, block.take(), std::move(edges));
  }

  std::vector<Digest> leaves(cfg_.n, kBottomLeaf);
  for (const auto& p : prev) {
    if (p) leaves[p->source()] = p->id();
  }
  if (avoid) leaves[anchor->source()] = kBottomLeaf;
  std::optional<SamplingProof> proof;
  try {
    auto edges = sparse_edges(r, std::move(leaves), anchor, !avoid && strategy_.kind != StrategyKind::anchor_avoider,
                              proof);
    return Vertex(r, id_, block.take(), std::move(edges), std::move(proof));
  } catch (const SamplingError&) {
    return std::nullopt;
  }
}

std::optional<Vertex> Validator::create_grinding(Round r) {
  ByteWriter block;
  block.u64(r);
  const auto prev = dag_.round(r - 1);
  const VertexPtr anchor = dag_.get_anchor(r - 1);
  const VertexPtr target = r >= 4 ? dag_.get_anchor(r - 2) : nullptr;

  std::vector<std::uint32_t> pool;
  for (const auto& p : prev) {
    if (p && p != anchor) pool.push_back(p->source());
  }
  if (pool.size() < cfg_.quorum() && anchor) pool.push_back(anchor->source());
  if (pool.size() < cfg_.quorum()) return std::nullopt;
  auto votes_for_target = [&](std::uint32_t src) { return target && prev[src]->has_edge(target->id()); };

  // First candidate: every non-voter before any voter.
  std::vector<std::uint32_t> first = pool;
  std::stable_sort(first.begin(), first.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return !votes_for_target(a) && votes_for_target(b); });
  first.resize(cfg_.quorum());

  if (cfg_.variant == Variant::baseline) {
    std::vector<Edge> edges;
    for (auto src : first) edges.push_back({src, prev[src]->id()});
    return Vertex(r, id_, block.take(), std::move(edges));
  }

  const std::uint32_t attempts = pool.size() == cfg_.quorum() ? 1 : strategy_.attempts;
  std::optional<Vertex> best;
  std::size_t best_score = SIZE_MAX;
  for (std::uint32_t a = 0; a < attempts && best_score > 0; ++a) {
    std::vector<std::uint32_t> subset = first;
    if (a > 0) {
      subset.clear();
      for (auto i : rng_.sample(static_cast<std::uint32_t>(pool.size()), cfg_.quorum())) subset.push_back(pool[i]);
    }
    std::vector<Digest> leaves(cfg_.n, kBottomLeaf);
    for (auto src : subset) leaves[src] = prev[src]->id();
    std::optional<SamplingProof> proof;
    std::vector<Edge> edges;
    try {
      edges = sparse_edges(r, std::move(leaves), nullptr, false, proof);
    } catch (const SamplingError&) {
      continue;
    }
    std::size_t score = 0;
    for (const auto& e : edges) {
      if (e.source != id_ && votes_for_target(e.source)) ++score;
    }
    if (score < best_score) {
      best_score = score;
      best.emplace(r, id_, block.data(), std::move(edges), std::move(proof));
    }
  }
  return best;
}

void Validator::on_deliver(std::uint32_t sender, Round seq, const VertexPtr& v) {
  if (!started_ || crashed_) return;
  if (!validate_vertex(*v, seq, sender, cfg_, alba_, cache_)) {
    ++rejected_;
    return;
  }
  if (dag_.contains(v->id()) || buffer_.count({v->round(), v->source()})) return;
  buffer_.emplace(std::make_pair(v->round(), v->source()), v);
  process();
  advance();
}

void Validator::on_timer() {
  if (!started_ || crashed_) return;
  advance();
}

void Validator::process() {
  // Sorted by round, so a parent always precedes its children in one pass.
  for (auto it = buffer_.begin(); it != buffer_.end();) {
    const VertexPtr v = it->second;
    if (!dag_.parents_present(*v)) {
      ++it;
      continue;
    }
    it = buffer_.erase(it);
    if (dag_.contains(v->round(), v->source())) continue;
    dag_.add_vertex(v);
    watch_menace(*v);
    try_committing(*v);
  }
  if (!hooks_.missing_parent) return;
  for (const auto& [slot, v] : buffer_) {
    for (const auto& e : v->edges()) {
      if (dag_.contains(e.id) || buffer_.count({slot.first - 1, e.source})) continue;
      if (requested_.insert(e.id).second) hooks_.missing_parent(e.source, slot.first - 1, e.id, v->source());
    }
  }
}

void Validator::try_committing(const Vertex& v) {
  const VertexPtr anchor = dag_.get_anchor(v.round() - 1);
  if (!anchor) return;
  if (dag_.anchor_votes(anchor->round()) >= direct_commit_threshold(cfg_.variant, cfg_.f)) order_anchors(anchor);
}

void Validator::order_anchors(const VertexPtr& v) {
  if (v->round() <= last_ordered_) return;
  VertexPtr anchor = v;
  stack_.push_back(anchor);
  for (Round r = v->round() - 2; r > last_ordered_; r -= 2) {
    const VertexPtr prev = dag_.get_anchor(r);
    if (prev && dag_.reaches_anchor(*anchor, r)) {
      stack_.push_back(prev);
      anchor = prev;
    }
  }
  last_ordered_ = v->round();
  order_history();
}

void Validator::order_history() {
  const Time now = hooks_.now();
  const VertexId direct = stack_.front()->id();
  while (!stack_.empty()) {
    const VertexPtr anchor = stack_.back();
    stack_.pop_back();
    const auto past = dag_.causal_past_until(*anchor, [&](const Vertex& u) { return ordered_.count(u.id()) != 0; });
    for (const auto& u : past) {
      ordered_.insert(u->id());
      log_.push_back({u->source(), u->round(), u->id()});
      log_times_.push_back(now);
      log_anchors_.push_back(anchor->round());
      if (u->source() == id_ && u->round() < sent_.size() && sent_[u->round()] >= 0) {
        latencies_.emplace_back(u->round(), now - sent_[u->round()]);
      }
    }
    committed_.push_back({anchor->round(), anchor->id(), anchor->id() == direct, now});
  }
}

void Validator::watch_menace(const Vertex& v) {
  const std::uint32_t threshold = direct_commit_threshold(cfg_.variant, cfg_.f);
  const Round r = v.round();
  if (is_anchor_round(r) && v.source() == anchor_source(r, cfg_.n)) {
    for (Round ra : voted_anchors_) {
      if (ra < r && !dag_.reaches_anchor(v, ra)) ++menacing_;
    }
  }
  const Round prev = r - 1;
  if (!is_anchor_round(prev)) return;
  const VertexPtr a = dag_.get_anchor(prev);
  if (!a || !v.has_edge(a->id()) || dag_.anchor_votes(prev) != threshold) return;
  voted_anchors_.push_back(prev);
  for (Round later = prev + 2; later <= dag_.highest_round(); later += 2) {
    const VertexPtr b = dag_.get_anchor(later);
    if (b && !dag_.reaches_anchor(*b, prev)) ++menacing_;
  }
}

}  // namespace sbs
