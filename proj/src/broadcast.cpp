#include "sbs/broadcast.hpp"

#include <algorithm>

namespace sbs {
namespace {

constexpr std::string_view kPayloadTag = "payload";
constexpr std::string_view kPullReplyTag = "pull-reply";
constexpr std::string_view kEchoTag = "echo";
constexpr std::string_view kCertTag = "cert";
constexpr std::string_view kQueryTag = "cert-query";
constexpr std::string_view kPullTag = "pull";

}  // namespace

ReliableBroadcast::ReliableBroadcast(Simulator& sim, TrafficLedger& ledger, const WireModel& wire, const RbConfig& cfg,
                                     std::uint64_t seed, DeliverFn deliver)
    : sim_(sim),
      ledger_(ledger),
      wire_(wire),
      cfg_(cfg),
      n_(wire.n),
      quorum_(2 * max_faults(wire.n) + 1),
      deliver_(std::move(deliver)),
      active_(wire.n, true),
      state_(wire.n) {
  rng_.reserve(n_);
  for (std::uint32_t v = 0; v < n_; ++v) rng_.emplace_back(seed, Stream::broadcast, v);
  echo_size_ = calib::kMessageHeader + 32 + signature_size(wire.lambda);
  cert_size_ = calib::kMessageHeader + 32 + certificate_size(wire.scheme, wire.n, wire.lambda);
  query_size_ = calib::kMessageHeader;
  pull_req_size_ = calib::kMessageHeader + 32;
}

ReliableBroadcast::Inst& ReliableBroadcast::inst(std::uint32_t node, std::uint32_t sender, Round seq) {
  auto& v = state_[node];
  const std::size_t key = seq * n_ + sender;
  if (v.size() <= key) v.resize((seq + 1) * n_);
  return v[key];
}

const ReliableBroadcast::Inst* ReliableBroadcast::find(std::uint32_t node, std::uint32_t sender, Round seq) const {
  const auto& v = state_[node];
  const std::size_t key = seq * n_ + sender;
  return key < v.size() ? &v[key] : nullptr;
}

void ReliableBroadcast::record(std::uint32_t from, Round seq, TrafficCategory cat, std::uint64_t bytes) {
  ledger_.record(from, seq, cat, bytes);
}

void ReliableBroadcast::send_payload(std::uint32_t from, std::uint32_t to, std::uint32_t sender, const VertexPtr& v,
                                     bool pull_reply) {
  const VertexSize sz = vertex_wire_size(*v, wire_);
  const std::uint64_t size = calib::kMessageHeader + sz.total();
  if (pull_reply) {
    record(from, v->round(), TrafficCategory::pull_responses, size);
  } else {
    record(from, v->round(), TrafficCategory::vertex_metadata, calib::kMessageHeader + sz.metadata);
    record(from, v->round(), TrafficCategory::payload, sz.payload);
  }
  ++messages_;
  sim_.send(from, to, size, pull_reply ? kPullReplyTag : kPayloadTag, [this, from, to, sender, v] {
    if (!active_[to]) return;
    if (cfg_.ideal) {
      Inst& s = inst(to, sender, v->round());
      if (s.delivered_at >= 0) return;
      s.payload = v;
      s.cert = std::make_shared<const Certificate>(Certificate{v->id(), {}});
      try_deliver(to, sender, v->round());
      return;
    }
    on_payload(to, from, sender, v);
  });
}

void ReliableBroadcast::send_echo(std::uint32_t from, std::uint32_t sender, Round seq, const VertexId& id) {
  if (from == sender) {
    on_echo(sender, from, seq, id);
    return;
  }
  record(from, seq, TrafficCategory::broadcast_overhead, echo_size_);
  ++messages_;
  sim_.send(from, sender, echo_size_, kEchoTag, [this, from, sender, seq, id] {
    if (active_[sender]) on_echo(sender, from, seq, id);
  });
}

void ReliableBroadcast::send_cert(std::uint32_t from, std::uint32_t to, std::uint32_t sender, Round seq,
                                  const std::shared_ptr<const Certificate>& c) {
  record(from, seq, TrafficCategory::broadcast_overhead, cert_size_);
  ++messages_;
  sim_.send(from, to, cert_size_, kCertTag, [this, from, to, sender, seq, c] {
    if (active_[to]) on_cert(to, from, sender, seq, c, false);
  });
}

void ReliableBroadcast::broadcast(std::uint32_t sender, const VertexPtr& v) {
  broadcast_faulty(sender, v, nullptr, SenderFault::none, 0);
}

void ReliableBroadcast::broadcast_faulty(std::uint32_t sender, const VertexPtr& a, const VertexPtr& b,
                                         SenderFault fault, std::uint32_t k) {
  if (!active_[sender]) return;
  const Round seq = a->round();
  broadcasts_.emplace(std::make_pair(sender, seq), std::make_pair(a->id(), sim_.now()));

  std::vector<std::uint32_t> peers;
  for (std::uint32_t p = 0; p < n_; ++p) {
    if (p != sender) peers.push_back(p);
  }
  std::vector<std::uint32_t> order = peers;
  rng_[sender].shuffle(order);

  if (cfg_.ideal) {
    Inst& s = inst(sender, sender, seq);
    s.payload = a;
    s.cert = std::make_shared<const Certificate>(Certificate{a->id(), {}});
    try_deliver(sender, sender, seq);
    for (auto p : order) send_payload(sender, p, sender, a, false);
    return;
  }

  Tally& t = tallies_[{sender, seq}];
  t.fault = fault;
  t.k = k;
  Inst& s = inst(sender, sender, seq);
  s.payload = a;
  s.echoed = true;
  for (auto p : order) {
    const auto rank = static_cast<std::uint32_t>(std::find(peers.begin(), peers.end(), p) - peers.begin());
    if (fault == SenderFault::payload_to_first_k && rank >= k) continue;
    const bool second_half = rank >= peers.size() / 2;
    send_payload(sender, p, sender, (fault == SenderFault::equivocate_split && second_half) ? b : a, false);
  }
  on_echo(sender, sender, seq, a->id());
}

void ReliableBroadcast::on_payload(std::uint32_t node, std::uint32_t from, std::uint32_t sender, const VertexPtr& v) {
  const Round seq = v->round();
  Inst& s = inst(node, sender, seq);
  if (s.delivered_at >= 0) return;
  if (!s.payload || (s.cert && s.cert->id == v->id())) s.payload = v;
  if (from == sender && !s.echoed) {
    s.echoed = true;
    send_echo(node, sender, seq, v->id());
    sim_.schedule(sim_.now() + from_ms(cfg_.cert_wait_ms), node, "cert-wait", [this, node, sender, seq] {
      const Inst* cur = find(node, sender, seq);
      if (!active_[node] || !cur || cur->cert || cur->querying) return;
      inst(node, sender, seq).querying = true;
      auto order = std::make_shared<std::vector<std::uint32_t>>();
      for (std::uint32_t p = 0; p < n_; ++p) {
        if (p != node && p != sender) order->push_back(p);
      }
      rng_[node].shuffle(*order);
      query_step(node, sender, seq, order, 0);
    });
  }
  try_deliver(node, sender, seq);
}

void ReliableBroadcast::on_echo(std::uint32_t sender, std::uint32_t echoer, Round seq, const VertexId& id) {
  auto it = tallies_.find({sender, seq});
  if (it == tallies_.end() || it->second.certified) return;
  Tally& t = it->second;
  for (const auto& [_, signers] : t.echoes) {
    if (std::find(signers.begin(), signers.end(), echoer) != signers.end()) return;
  }
  auto& signers = t.echoes[id];
  signers.push_back(echoer);
  if (signers.size() < quorum_) return;

  t.certified = true;
  auto cert = std::make_shared<const Certificate>(Certificate{id, signers});
  std::vector<std::uint32_t> order;
  for (std::uint32_t p = 0; p < n_; ++p) {
    if (p == sender) continue;
    if (t.fault == SenderFault::cert_to_first_k && order.size() >= t.k) break;
    order.push_back(p);
  }
  rng_[sender].shuffle(order);
  for (auto p : order) send_cert(sender, p, sender, seq, cert);
  on_cert(sender, sender, sender, seq, cert, false);
}

void ReliableBroadcast::on_cert(std::uint32_t node, std::uint32_t from, std::uint32_t sender, Round seq,
                                const std::shared_ptr<const Certificate>& c, bool relay) {
  Inst& s = inst(node, sender, seq);
  if (s.cert) return;
  s.cert = c;
  if (relay) {
    std::vector<std::uint32_t> order;
    for (std::uint32_t p = 0; p < n_; ++p) {
      if (p != node && p != from) order.push_back(p);
    }
    rng_[node].shuffle(order);
    for (auto p : order) send_cert(node, p, sender, seq, c);
  }
  try_deliver(node, sender, seq);
  if (inst(node, sender, seq).delivered_at < 0) start_pull(node, sender, seq, from);
}

void ReliableBroadcast::try_deliver(std::uint32_t node, std::uint32_t sender, Round seq) {
  Inst& s = inst(node, sender, seq);
  if (s.delivered_at >= 0 || !s.cert || !s.payload || s.payload->id() != s.cert->id) return;
  s.delivered_at = sim_.now();
  // Deferred so the receiver never re-enters the broadcast layer mid-handler.
  sim_.schedule(sim_.now(), node, "rb-deliver", [this, node, sender, seq, v = s.payload] {
    if (active_[node]) deliver_(node, sender, seq, v);
  });
}

void ReliableBroadcast::start_pull(std::uint32_t node, std::uint32_t sender, Round seq, std::uint32_t hint) {
  Inst& s = inst(node, sender, seq);
  if (s.pulling || s.delivered_at >= 0) return;
  s.pulling = true;
  auto order = std::make_shared<std::vector<std::uint32_t>>();
  std::vector<char> seen(n_, 0);
  seen[node] = 1;
  auto add = [&](std::uint32_t p) {
    if (p < n_ && !seen[p]) {
      seen[p] = 1;
      order->push_back(p);
    }
  };
  add(hint);
  std::vector<std::uint32_t> signers = s.cert->signers;
  rng_[node].shuffle(signers);
  for (auto p : signers) add(p);
  std::vector<std::uint32_t> rest;
  for (std::uint32_t p = 0; p < n_; ++p) {
    if (!seen[p]) rest.push_back(p);
  }
  rng_[node].shuffle(rest);
  for (auto p : rest) add(p);
  if (order->empty()) return;
  sim_.schedule(sim_.now() + from_ms(cfg_.pull_wait_ms), node, "pull-wait",
                [this, node, sender, seq, order] { pull_step(node, sender, seq, order, 0); });
}

void ReliableBroadcast::pull_step(std::uint32_t node, std::uint32_t sender, Round seq,
                                  std::shared_ptr<std::vector<std::uint32_t>> order, std::size_t next) {
  if (!active_[node]) return;
  Inst& s = inst(node, sender, seq);
  if (s.delivered_at >= 0) {
    s.pulling = false;
    return;
  }
  const VertexId id = s.cert->id;
  for (std::uint32_t i = 0; i < cfg_.pull_fanout && i < order->size(); ++i) {
    const std::uint32_t holder = (*order)[(next + i) % order->size()];
    record(node, seq, TrafficCategory::broadcast_overhead, pull_req_size_);
    ++messages_;
    sim_.send(node, holder, pull_req_size_, kPullTag, [this, node, holder, sender, seq, id] {
      if (active_[holder]) on_pull_request(holder, node, sender, seq, id);
    });
  }
  sim_.schedule(sim_.now() + from_ms(cfg_.pull_retry_ms), node, "pull-retry",
                [this, node, sender, seq, order, next] {
                  pull_step(node, sender, seq, order, next + cfg_.pull_fanout);
                });
}

void ReliableBroadcast::on_pull_request(std::uint32_t node, std::uint32_t from, std::uint32_t sender, Round seq,
                                        const VertexId& id) {
  const Inst* s = find(node, sender, seq);
  if (s && s->payload && s->payload->id() == id) send_payload(node, from, sender, s->payload, true);
}

void ReliableBroadcast::query_step(std::uint32_t node, std::uint32_t sender, Round seq,
                                   std::shared_ptr<std::vector<std::uint32_t>> order, std::size_t next) {
  if (!active_[node] || order->empty()) return;
  if (inst(node, sender, seq).cert) return;
  for (std::uint32_t i = 0; i < cfg_.pull_fanout && i < order->size(); ++i) {
    const std::uint32_t peer = (*order)[(next + i) % order->size()];
    record(node, seq, TrafficCategory::broadcast_overhead, query_size_);
    ++messages_;
    sim_.send(node, peer, query_size_, kQueryTag, [this, node, peer, sender, seq] {
      if (active_[peer]) on_query(peer, node, sender, seq);
    });
  }
  sim_.schedule(sim_.now() + from_ms(cfg_.cert_wait_ms), node, "cert-query-retry",
                [this, node, sender, seq, order, next] {
                  query_step(node, sender, seq, order, next + cfg_.pull_fanout);
                });
}

void ReliableBroadcast::on_query(std::uint32_t node, std::uint32_t from, std::uint32_t sender, Round seq) {
  const Inst* s = find(node, sender, seq);
  if (!s || !s->cert) return;
  auto c = s->cert;
  record(node, seq, TrafficCategory::broadcast_overhead, cert_size_);
  ++messages_;
  // A certificate that had to be asked for is relayed onward by the asker.
  sim_.send(node, from, cert_size_, kCertTag, [this, node, from, sender, seq, c] {
    if (active_[from]) on_cert(from, node, sender, seq, c, true);
  });
}

void ReliableBroadcast::learn_certificate(std::uint32_t node, std::uint32_t sender, Round seq, const VertexId& id,
                                          std::uint32_t hint) {
  if (cfg_.ideal || !active_[node]) return;
  Inst& s = inst(node, sender, seq);
  if (s.delivered_at >= 0) return;
  if (!s.cert) s.cert = std::make_shared<const Certificate>(Certificate{id, {}});
  try_deliver(node, sender, seq);
  if (inst(node, sender, seq).delivered_at < 0) start_pull(node, sender, seq, hint);
}

std::optional<VertexId> ReliableBroadcast::delivered(std::uint32_t node, std::uint32_t sender, Round seq) const {
  const Inst* s = find(node, sender, seq);
  if (!s || s->delivered_at < 0) return std::nullopt;
  return s->payload->id();
}

Time ReliableBroadcast::delivered_at(std::uint32_t node, std::uint32_t sender, Round seq) const {
  const Inst* s = find(node, sender, seq);
  return s ? s->delivered_at : -1;
}

void ReliableBroadcast::for_each_delivery(
    const std::function<void(std::uint32_t, std::uint32_t, Round, const VertexId&, Time)>& fn) const {
  for (std::uint32_t node = 0; node < n_; ++node) {
    const auto& v = state_[node];
    for (std::size_t key = 0; key < v.size(); ++key) {
      if (v[key].delivered_at < 0) continue;
      fn(node, static_cast<std::uint32_t>(key % n_), key / n_, v[key].payload->id(), v[key].delivered_at);
    }
  }
}

}  // namespace sbs
