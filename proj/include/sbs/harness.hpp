#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbs/audit.hpp"
#include "sbs/broadcast.hpp"
#include "sbs/consensus.hpp"
#include "sbs/hash.hpp"
#include "sbs/simnet.hpp"
#include "sbs/simulation.hpp"
#include "sbs/traffic.hpp"

namespace sbs {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One experiment as read from a JSON config file.
struct ExperimentConfig {
  Variant variant = Variant::sparse;
  std::uint32_t n = 4;
  std::uint32_t D = 8;
  std::uint32_t lambda = 128;
  std::uint32_t lambda_complete = 20;
  CryptoScheme scheme = CryptoScheme::threshold;
  VcProofModel vc = VcProofModel::merkle;
  std::size_t payload_bytes = 0;
  std::vector<double> bandwidth_caps{0.0};  // bytes/s per sender, 0 = unlimited
  NetConfig net;
  RbConfig rb;
  double rb_delta_ms = -1.0;  // < 0: three message delays (echo, certificate, pull)
  double timeout_ms = -1.0;   // < 0: 2 * rb_delta_ms
  std::map<std::uint32_t, Strategy> byzantine;
  Round rounds = 30;
  std::uint64_t seed = 1;
  std::uint32_t repetitions = 1;
  double horizon_ms = 600'000.0;

  /// Throws ConfigError on unknown keys, wrong types or invalid values.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  [[nodiscard]] nlohmann::json to_json() const;
  void validate() const;

  [[nodiscard]] std::uint32_t f() const { return max_faults(n); }
  [[nodiscard]] double effective_rb_delta_ms() const { return rb_delta_ms < 0 ? 3.0 * net.delta_ms : rb_delta_ms; }
  [[nodiscard]] double effective_timeout_ms() const {
    return timeout_ms < 0 ? 2.0 * effective_rb_delta_ms() : timeout_ms;
  }
  [[nodiscard]] ProtocolConfig protocol() const;
  [[nodiscard]] SimulationConfig simulation(double bandwidth, std::uint64_t seed) const;
  /// SHA-256 over the canonical JSON form.
  [[nodiscard]] Digest digest() const;
  /// Seed of repetition `rep` at bandwidth cap `bandwidth`.
  [[nodiscard]] std::uint64_t run_seed(double bandwidth, std::uint32_t rep) const;
};

/// Parses "5MB", "10MB", "500KB", "1.5GB", "12345" (bytes/s) or "unlimited" (0).
double parse_bandwidth(const std::string& s);
std::string format_bandwidth(double bytes_per_sec);

struct MetricsRecord {
  Variant variant = Variant::sparse;
  std::uint32_t n = 0, f = 0, D = 0, lambda = 0;
  CryptoScheme scheme = CryptoScheme::threshold;
  double bandwidth_bps = 0;
  std::uint64_t seed = 0;
  Round rounds = 0;
  double throughput = 0;  // ordered vertices per second per correct validator
  double latency_mean_ms = 0, latency_p50_ms = 0, latency_p95_ms = 0;
  double egress_metadata_per_round = 0;
  double egress_total_per_round = 0;
  bool audit_ok = false;

  AuditReport audit;
  std::map<std::uint32_t, std::uint64_t> inclusion;  // latency in rounds -> vertices, first correct validator
  double sim_seconds = 0;
  std::uint64_t events = 0;
};

class AuditFailed : public std::runtime_error {
 public:
  AuditFailed(MetricsRecord rec, const std::string& what) : std::runtime_error(what), record(std::move(rec)) {}
  MetricsRecord record;
};

/// Metrics of a finished simulation.
MetricsRecord collect_metrics(const Simulation& s, const ExperimentConfig& cfg, double bandwidth);

struct RunOptions {
  bool fail_on_audit = true;  // throw AuditFailed instead of returning audit_ok = false
  std::ostream* event_stream = nullptr;
};

/// Throws Stalled or AuditFailed.
MetricsRecord run_experiment(const ExperimentConfig& cfg, double bandwidth, std::uint64_t seed,
                             const RunOptions& opts = {});
/// Every bandwidth cap times every repetition.
std::vector<MetricsRecord> run_all(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Sample sizes for a sweep; std::nullopt stands for the baseline variant.
using SweepPoint = std::optional<std::uint32_t>;
std::vector<SweepPoint> parse_sample_list(const std::string& s);
std::vector<double> parse_bandwidth_list(const std::string& s);
std::vector<MetricsRecord> sweep(const ExperimentConfig& base, const std::vector<SweepPoint>& samples,
                                 const std::vector<double>& bandwidths, const RunOptions& opts = {});

inline constexpr std::string_view kRunCsvHeader =
    "variant,n,f,D,lambda,scheme,bandwidth_bps,seed,rounds,throughput_bps,commit_latency_mean_ms,"
    "commit_latency_p50_ms,commit_latency_p95_ms,egress_metadata_bytes_per_round,egress_total_bytes_per_round,"
    "audit_ok";
std::string to_csv(const std::vector<MetricsRecord>& records);
std::string inclusion_csv(const std::map<std::uint32_t, std::uint64_t>& counts);
/// Writes through a temporary file and renames, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace sbs
