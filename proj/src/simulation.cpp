#include "sbs/simulation.hpp"

#include <stdexcept>

namespace sbs {

Simulation::Simulation(SimulationConfig cfg) : cfg_(std::move(cfg)) {
  const ProtocolConfig& p = cfg_.protocol;
  p.validate();
  if (cfg_.roster.empty()) cfg_.roster.assign(p.n, Strategy{});
  if (cfg_.roster.size() != p.n) throw std::invalid_argument("roster size differs from n");
  std::uint32_t faulty = 0;
  for (const auto& s : cfg_.roster) faulty += s.correct() ? 0 : 1;
  if (faulty > p.f) throw std::invalid_argument("more Byzantine validators than f");
  if (cfg_.rounds < 2) throw std::invalid_argument("rounds must be at least 2");

  ledger_ = TrafficLedger(p.n);
  sim_ = std::make_unique<Simulator>(cfg_.net, p.n, cfg_.seed);
  sim_->retain_log(cfg_.retain_events);
  sim_->stream_log(cfg_.event_stream);
  schedules_.resize(p.n);

  const WireModel wire{p.scheme, cfg_.vc, p.n, p.lambda, p.payload_bytes};
  rb_ = std::make_unique<ReliableBroadcast>(
      *sim_, ledger_, wire, cfg_.rb, cfg_.seed,
      [this](std::uint32_t node, std::uint32_t sender, Round seq, const VertexPtr& v) {
        if (cfg_.record_schedule) schedules_[node].push_back({sim_->now(), sender, seq, v});
        validators_[node]->on_deliver(sender, seq, v);
      });

  validators_.reserve(p.n);
  for (std::uint32_t id = 0; id < p.n; ++id) {
    Validator::Hooks hooks;
    hooks.now = [this] { return sim_->now(); };
    hooks.broadcast = [this, id](const VertexPtr& v) { rb_->broadcast(id, v); };
    hooks.set_timer = [this, id](Time at) {
      sim_->schedule(at, id, "round-timer", [this, id] { validators_[id]->on_timer(); });
    };
    hooks.missing_parent = [this, id](std::uint32_t source, Round round, const VertexId& vid, std::uint32_t hint) {
      rb_->learn_certificate(id, source, round, vid, hint);
    };
    hooks.crashed = [this, id] { rb_->set_active(id, false); };
    validators_.push_back(
        std::make_unique<Validator>(id, p, cfg_.roster[id], std::move(hooks), &cache_, cfg_.seed));
    if (cfg_.roster[id].kind == StrategyKind::silent) rb_->set_active(id, false);
  }
}

std::vector<std::uint32_t> Simulation::correct_validators() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t v = 0; v < n(); ++v)
    if (is_correct(v)) out.push_back(v);
  return out;
}

bool Simulation::all_reached() const {
  for (std::uint32_t v = 0; v < n(); ++v) {
    if (is_correct(v) && validators_[v]->current_round() < cfg_.rounds) return false;
  }
  return true;
}

// Every correct validator's vertex up to `rounds - 1` is delivered at every
// correct validator.
bool Simulation::broadcasts_settled() const {
  for (const auto& [key, sent] : rb_->broadcasts()) {
    const auto [sender, seq] = key;
    if (!is_correct(sender) || seq >= cfg_.rounds) continue;
    for (std::uint32_t v = 0; v < n(); ++v) {
      if (is_correct(v) && !rb_->delivered(v, sender, seq)) return false;
    }
  }
  return true;
}

void Simulation::run() {
  for (std::uint32_t id = 0; id < n(); ++id) {
    if (cfg_.roster[id].kind == StrategyKind::silent) continue;
    sim_->schedule(0, id, "start", [this, id] { validators_[id]->start(); });
  }
  const Time horizon = from_ms(cfg_.horizon_ms);
  sim_->run_until([this] { return all_reached(); }, horizon);
  if (!all_reached()) {
    throw Stalled("correct validators did not reach round " + std::to_string(cfg_.rounds) + " by t=" +
                  std::to_string(cfg_.horizon_ms) + " ms");
  }
  reached_at_ = sim_->now();

  // Drain: let the last rounds' votes and broadcasts settle before auditing.
  const double drain_min = cfg_.drain_min_ms < 0 ? cfg_.protocol.delta_ms : cfg_.drain_min_ms;
  const Time min_end = reached_at_ + from_ms(drain_min);
  const Time max_end = reached_at_ + from_ms(std::max(drain_min, cfg_.drain_max_ms));
  const Time step = from_ms(50.0);
  sim_->run_through(min_end);
  while (sim_->now() < max_end && !broadcasts_settled()) sim_->run_through(std::min(max_end, sim_->now() + step));
  ended_at_ = sim_->now();
}

}  // namespace sbs
