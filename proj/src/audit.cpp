#include "sbs/audit.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "sbs/simulation.hpp"

namespace sbs {
namespace {

void fail(AuditReport& r, bool& flag, std::string msg) {
  flag = false;
  if (r.failures.size() < 32) r.failures.push_back(std::move(msg));
}

}  // namespace

std::string AuditReport::summary() const {
  std::ostringstream out;
  out << (ok() ? "ok" : "FAILED") << " prefix=" << prefix_agreement << " dup=" << no_duplicates
      << " menace=" << no_menace << " monotone=" << anchors_monotone << " rb_integrity=" << rb_integrity
      << " rb_validity=" << rb_validity << " rb_agreement=" << rb_agreement << " liveness=" << liveness
      << " conservation=" << conservation << " post_gst_anchors=" << post_gst_anchors
      << " direct=" << direct_commits;
  for (const auto& f : failures) out << "\n  " << f;
  return out.str();
}

bool logs_prefix_consistent(const std::vector<const std::vector<DeliveredEntry>*>& logs) {
  // Comparing every log against the longest one covers all pairs.
  const std::vector<DeliveredEntry>* longest = nullptr;
  for (const auto* l : logs)
    if (!longest || l->size() > longest->size()) longest = l;
  for (const auto* l : logs) {
    if (!std::equal(l->begin(), l->end(), longest->begin())) return false;
  }
  return true;
}

bool log_duplicate_free(const std::vector<DeliveredEntry>& log) {
  std::unordered_set<VertexId, DigestHash> ids;
  std::set<std::pair<Round, std::uint32_t>> slots;
  for (const auto& e : log) {
    if (!ids.insert(e.id).second || !slots.emplace(e.round, e.source).second) return false;
  }
  return true;
}

AuditReport audit_simulation(const Simulation& s) {
  AuditReport r;
  const auto correct = s.correct_validators();
  const auto& cfg = s.config();
  const std::uint32_t n = s.n();

  std::vector<const std::vector<DeliveredEntry>*> logs;
  for (auto v : correct) logs.push_back(&s.validator(v).log());
  if (!logs_prefix_consistent(logs)) fail(r, r.prefix_agreement, "correct logs disagree on a common prefix");

  for (auto v : correct) {
    const Validator& val = s.validator(v);
    if (!log_duplicate_free(val.log())) fail(r, r.no_duplicates, "validator " + std::to_string(v) + " logged a duplicate");
    r.menacing_events += val.menacing_events();
    if (check_menacing(val.dag(), direct_commit_threshold(cfg.protocol.variant, cfg.protocol.f))) {
      fail(r, r.no_menace, "validator " + std::to_string(v) + " holds a menacing DAG");
    }
    Round last = 0;
    for (const auto& c : val.committed()) {
      if (c.round <= last) fail(r, r.anchors_monotone, "validator " + std::to_string(v) + " committed anchors out of order");
      last = c.round;
    }
  }
  if (r.menacing_events > 0) fail(r, r.no_menace, std::to_string(r.menacing_events) + " menacing events");

  // Broadcast layer: per-slot consistency across correct nodes, validity for
  // correct senders, and agreement on whatever any correct node delivered.
  const ReliableBroadcast& rb = s.rb();
  std::map<std::pair<std::uint32_t, Round>, VertexId> first;
  std::map<std::pair<std::uint32_t, Round>, std::uint32_t> count;
  rb.for_each_delivery([&](std::uint32_t node, std::uint32_t sender, Round seq, const VertexId& id, Time) {
    if (!s.is_correct(node)) return;
    const auto key = std::make_pair(sender, seq);
    auto [it, fresh] = first.emplace(key, id);
    if (!fresh && it->second != id) {
      fail(r, r.rb_integrity, "conflicting deliveries for sender " + std::to_string(sender) + " seq " + std::to_string(seq));
    }
    ++count[key];
  });
  for (const auto& [key, sent] : rb.broadcasts()) {
    const auto [sender, seq] = key;
    if (!s.is_correct(sender)) continue;
    const auto it = first.find(key);
    if (it != first.end() && it->second != sent.first) {
      fail(r, r.rb_integrity, "delivered a vertex correct sender " + std::to_string(sender) + " never sent");
    }
    if (seq < cfg.rounds && count[key] != correct.size()) {
      fail(r, r.rb_validity, "correct broadcast (" + std::to_string(sender) + "," + std::to_string(seq) +
                                 ") missing at some correct node");
    }
  }
  for (const auto& [key, c] : count) {
    if (key.second < cfg.rounds && c != correct.size()) {
      fail(r, r.rb_agreement, "delivery of (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                                  ") reached only " + std::to_string(c) + " correct nodes");
    }
  }

  // Liveness after GST: anchors of correct validators in rounds every correct
  // validator entered after GST are directly committed by all of them.
  const Time gst = s.sim().gst();
  const std::uint32_t threshold = direct_commit_threshold(cfg.protocol.variant, cfg.protocol.f);
  for (Round a = 2; a + 2 <= cfg.rounds; a += 2) {
    const std::uint32_t leader = anchor_source(a, n);
    if (!s.is_correct(leader)) continue;
    Time earliest = -1;
    for (auto v : correct) {
      const Time t = s.validator(v).round_entered(a);
      if (t >= 0 && (earliest < 0 || t < earliest)) earliest = t;
    }
    if (earliest < gst) continue;
    ++r.post_gst_anchors;
    bool everywhere = true;
    for (auto v : correct) {
      const Validator& val = s.validator(v);
      const auto& cs = val.committed();
      const auto it = std::find_if(cs.begin(), cs.end(), [&](const CommittedAnchor& c) { return c.round == a; });
      const bool direct = it != cs.end() && val.dag().anchor_votes(a) >= threshold;
      if (!direct) {
        everywhere = false;
        fail(r, r.liveness, "anchor of round " + std::to_string(a) + " not directly committed by " + std::to_string(v));
      }
    }
    r.direct_commits += everywhere ? 1 : 0;
  }

  const TrafficLedger& ledger = s.ledger();
  for (std::uint32_t v = 0; v < n; ++v) {
    if (ledger.validator_total(v) != s.sim().bytes_sent(v)) {
      fail(r, r.conservation, "ledger and network disagree on bytes sent by " + std::to_string(v));
    }
  }
  return r;
}

EventLogAudit audit_event_log(std::istream& in, double gst_ms, double delta_ms) {
  EventLogAudit a;
  auto bad = [&](std::uint64_t line, const std::string& msg) {
    if (a.failures.size() < 32) a.failures.push_back("line " + std::to_string(line) + ": " + msg);
  };
  const bool bounded = gst_ms >= 0 && delta_ms > 0;
  const Time gst = bounded ? from_ms(gst_ms) : 0;
  const Time delta = bounded ? from_ms(delta_ms) : 0;
  std::map<std::uint32_t, Time> egress_free;  // per sender: end of the last transmission, in send order
  std::vector<std::tuple<Time, std::uint32_t, Time, Time>> sends;  // (sent, src, tx_start, tx_end)
  Time last_t = 0;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      bad(lineno, std::string("unparsable: ") + e.what());
      continue;
    }
    for (const char* k : {"t", "kind", "src", "dst", "size", "tag", "sent", "tx_start", "tx_end"}) {
      if (!j.contains(k)) bad(lineno, std::string("missing field ") + k);
    }
    if (!a.failures.empty() && a.failures.size() >= 32) break;
    if (!j.contains("tx_end")) continue;
    ++a.events;
    const Time t = j["t"].get<Time>();
    const Time sent = j["sent"].get<Time>();
    const Time tx_start = j["tx_start"].get<Time>();
    const Time tx_end = j["tx_end"].get<Time>();
    if (t < last_t) bad(lineno, "time goes backwards");
    last_t = t;
    if (!(sent <= tx_start && tx_start <= tx_end && tx_end <= t)) bad(lineno, "sent <= tx_start <= tx_end <= t violated");
    if (j["kind"] == "deliver") {
      ++a.deliveries;
      a.bytes += j["size"].get<std::uint64_t>();
      sends.emplace_back(sent, j["src"].get<std::uint32_t>(), tx_start, tx_end);
      if (bounded && tx_start >= gst && t - tx_end > delta) ++a.late_after_gst;
    }
  }
  // Egress windows of one sender never overlap.
  std::sort(sends.begin(), sends.end(), [](const auto& x, const auto& y) {
    return std::tie(std::get<1>(x), std::get<2>(x)) < std::tie(std::get<1>(y), std::get<2>(y));
  });
  for (const auto& [sent, src, start, end] : sends) {
    auto [it, fresh] = egress_free.emplace(src, end);
    if (!fresh) {
      if (start < it->second) bad(0, "overlapping egress at sender " + std::to_string(src));
      it->second = end;
    }
  }
  if (a.late_after_gst > 0) bad(0, std::to_string(a.late_after_gst) + " post-GST deliveries exceeded delta");
  return a;
}

}  // namespace sbs
