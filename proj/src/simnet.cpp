#include "sbs/simnet.hpp"

#include <algorithm>
#include <ostream>

namespace sbs {

void NetConfig::validate() const {
  if (!(tail_fraction >= 0.0 && tail_fraction <= 1.0)) throw std::invalid_argument("tail_fraction outside [0, 1]");
  if (base_sd_ms < 0 || tail_sd_ms < 0) throw std::invalid_argument("negative latency deviation");
  if (bandwidth_bytes_per_sec < 0) throw std::invalid_argument("negative bandwidth");
  if (delta_ms <= 0) throw std::invalid_argument("delta_ms must be positive");
  if (gst_ms < 0 || pre_gst_max_delay_ms < 0) throw std::invalid_argument("negative GST or pre-GST delay");
}

double sample_latency_ms(Rng& rng, const NetConfig& cfg) {
  const bool tail = rng.uniform() < cfg.tail_fraction;
  const double x = tail ? rng.normal(cfg.tail_mean_ms, cfg.tail_sd_ms) : rng.normal(cfg.base_mean_ms, cfg.base_sd_ms);
  return std::max(0.0, x);
}

Simulator::Simulator(const NetConfig& cfg, std::uint32_t n, std::uint64_t seed)
    : cfg_(cfg),
      gst_(from_ms(cfg.gst_ms)),
      delta_(from_ms(cfg.delta_ms)),
      pre_gst_max_(from_ms(cfg.pre_gst_max_delay_ms)),
      free_at_(n, 0),
      bytes_sent_(n, 0),
      adversary_rng_(seed, Stream::adversary) {
  cfg_.validate();
  latency_rng_.reserve(n);
  for (std::uint32_t v = 0; v < n; ++v) latency_rng_.emplace_back(seed, Stream::latency, v);
}

std::uint32_t Simulator::store(std::function<void()> fn, const LoggedEvent& meta) {
  if (!free_.empty()) {
    const std::uint32_t slot = free_.back();
    free_.pop_back();
    handlers_[slot] = std::move(fn);
    metas_[slot] = meta;
    return slot;
  }
  handlers_.push_back(std::move(fn));
  metas_.push_back(meta);
  return static_cast<std::uint32_t>(handlers_.size() - 1);
}

Time Simulator::send(std::uint32_t src, std::uint32_t dst, std::uint64_t size, std::string_view tag,
                     std::function<void()> on_deliver) {
  LoggedEvent e;
  e.kind = "deliver";
  e.src = src;
  e.dst = dst;
  e.size = size;
  e.tag = tag;
  e.sent = now_;
  e.tx_start = std::max(now_, free_at_[src]);
  Time tx = 0;
  if (cfg_.bandwidth_bytes_per_sec > 0) {
    tx = static_cast<Time>(std::ceil(static_cast<double>(size) * 1e6 / cfg_.bandwidth_bytes_per_sec));
  }
  e.tx_end = e.tx_start + tx;
  free_at_[src] = e.tx_end;

  Time latency = from_ms(sample_latency_ms(latency_rng_[src], cfg_));
  std::uint64_t prio = 0;
  if (e.tx_start >= gst_) {
    latency = std::min(latency, delta_);
  } else {
    if (pre_gst_max_ > 0) latency += static_cast<Time>(adversary_rng_.below(static_cast<std::uint64_t>(pre_gst_max_) + 1));
    const Time cap = std::max(e.tx_end, gst_) + delta_;
    latency = std::min(latency, cap - e.tx_end);
    prio = adversary_rng_.next();
  }
  e.at = e.tx_end + latency;
  if (e.tx_start >= gst_ && e.at > e.tx_end + delta_) ++late_;

  bytes_sent_[src] += size;
  ++messages_;
  queue_.push(Pending{e.at, prio, seq_++, store(std::move(on_deliver), e)});
  return e.at;
}

void Simulator::schedule(Time at, std::uint32_t owner, std::string_view tag, std::function<void()> fn) {
  LoggedEvent e;
  e.at = std::max(at, now_);
  e.kind = "timer";
  e.src = owner;
  e.dst = owner;
  e.tag = tag;
  e.sent = now_;
  e.tx_start = now_;
  e.tx_end = now_;
  queue_.push(Pending{e.at, 0, seq_++, store(std::move(fn), e)});
}

void Simulator::stream_log(std::ostream* out) { stream_ = out; }

void Simulator::emit(const LoggedEvent& e) {
  if (keep_log_) log_.push_back(e);
  if (stream_) {
    write_event_json(*stream_, e);
    *stream_ << '\n';
  }
}

void Simulator::step() {
  const Pending p = queue_.top();
  queue_.pop();
  now_ = p.at;
  std::function<void()> fn = std::move(handlers_[p.slot]);
  const LoggedEvent meta = metas_[p.slot];
  handlers_[p.slot] = nullptr;
  free_.push_back(p.slot);
  ++processed_;
  emit(meta);
  fn();
}

void Simulator::run_until(const std::function<bool()>& stop, Time horizon) {
  while (!stop()) {
    if (queue_.empty()) {
      throw Stalled("event queue drained at t=" + std::to_string(to_ms(now_)) + " ms before the stop condition");
    }
    if (queue_.top().at > horizon) return;
    step();
  }
}

void Simulator::run_through(Time t) {
  while (!queue_.empty() && queue_.top().at <= t) step();
  now_ = std::max(now_, t);
}

void write_event_json(std::ostream& out, const LoggedEvent& e) {
  out << "{\"t\":" << e.at << ",\"kind\":\"" << e.kind << "\",\"src\":" << e.src << ",\"dst\":" << e.dst
      << ",\"size\":" << e.size << ",\"tag\":\"" << e.tag << "\",\"sent\":" << e.sent << ",\"tx_start\":" << e.tx_start
      << ",\"tx_end\":" << e.tx_end << '}';
}

}  // namespace sbs
