#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sbs/rng.hpp"

namespace sbs {

/// Simulated time in integer microseconds.
using Time = std::int64_t;
inline constexpr Time kMicrosPerMs = 1000;
inline Time from_ms(double ms) { return static_cast<Time>(std::llround(ms * kMicrosPerMs)); }
inline double to_ms(Time t) { return static_cast<double>(t) / kMicrosPerMs; }

struct NetConfig {
  double base_mean_ms = 50.0;
  double base_sd_ms = 10.0;
  double tail_mean_ms = 500.0;
  double tail_sd_ms = 10.0;
  double tail_fraction = 0.01;
  double bandwidth_bytes_per_sec = 0.0;  // 0 = unlimited
  double delta_ms = 600.0;               // per-message bound once GST has passed
  double gst_ms = 0.0;
  double pre_gst_max_delay_ms = 0.0;

  void validate() const;
};

/// One line of the exported event log.
struct LoggedEvent {
  Time at = 0;
  std::string_view kind;  // "deliver" or "timer"
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint64_t size = 0;
  std::string_view tag;
  Time sent = 0;
  Time tx_start = 0;
  Time tx_end = 0;
};

class Stalled : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Draw from the bimodal latency model, in ms, clamped at zero.
double sample_latency_ms(Rng& rng, const NetConfig& cfg);

/// Single-threaded discrete-event loop plus the point-to-point network:
/// per-sender FIFO egress serialization, sampled link latency, and a
/// pre-GST adversary that adds bounded extra delay and shuffles ties.
class Simulator {
 public:
  Simulator(const NetConfig& cfg, std::uint32_t n, std::uint64_t seed);

  [[nodiscard]] Time now() const { return now_; }
  [[nodiscard]] const NetConfig& config() const { return cfg_; }
  [[nodiscard]] Time gst() const { return gst_; }
  [[nodiscard]] Time delta() const { return delta_; }

  /// Queue `size` bytes from src to dst; `on_deliver` runs at the receiver.
  /// Returns the delivery time.
  Time send(std::uint32_t src, std::uint32_t dst, std::uint64_t size, std::string_view tag,
            std::function<void()> on_deliver);
  void schedule(Time at, std::uint32_t owner, std::string_view tag, std::function<void()> fn);

  /// Runs events until `stop()` holds or the next event lies beyond
  /// `horizon`. Throws Stalled when the queue drains first.
  void run_until(const std::function<bool()>& stop, Time horizon);
  /// Runs every event with timestamp <= t.
  void run_through(Time t);

  /// Keep events in memory (for tests) and/or stream them as NDJSON.
  void retain_log(bool keep) { keep_log_ = keep; }
  void stream_log(std::ostream* out);
  [[nodiscard]] const std::vector<LoggedEvent>& log() const { return log_; }

  [[nodiscard]] std::uint64_t bytes_sent(std::uint32_t v) const { return bytes_sent_[v]; }
  [[nodiscard]] std::uint64_t messages_sent() const { return messages_; }
  [[nodiscard]] std::uint64_t events_processed() const { return processed_; }
  /// Messages transmitted after GST that arrived later than tx_end + delta.
  [[nodiscard]] std::uint64_t post_gst_violations() const { return late_; }

 private:
  struct Pending {
    Time at;
    std::uint64_t prio;
    std::uint64_t seq;
    std::uint32_t slot;
    bool operator>(const Pending& o) const {
      if (at != o.at) return at > o.at;
      if (prio != o.prio) return prio > o.prio;
      return seq > o.seq;
    }
  };
  std::uint32_t store(std::function<void()> fn, const LoggedEvent& meta);
  void step();
  void emit(const LoggedEvent& e);

  NetConfig cfg_;
  Time gst_, delta_, pre_gst_max_;
  Time now_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
  std::vector<std::function<void()>> handlers_;
  std::vector<LoggedEvent> metas_;
  std::vector<std::uint32_t> free_;
  std::vector<Time> free_at_;
  std::vector<std::uint64_t> bytes_sent_;
  std::vector<Rng> latency_rng_;
  Rng adversary_rng_;
  std::uint64_t messages_ = 0;
  std::uint64_t processed_ = 0;
  std::uint64_t late_ = 0;
  bool keep_log_ = false;
  std::ostream* stream_ = nullptr;
  std::vector<LoggedEvent> log_;
};

/// Writes one event as a single-line JSON object (no trailing newline).
void write_event_json(std::ostream& out, const LoggedEvent& e);

}  // namespace sbs
