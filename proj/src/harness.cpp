#include "sbs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace sbs {
namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::string read_string(const json& j, const char* key, const std::string& where) {
  std::string s;
  read(j, key, s, where);
  return s;
}

NetConfig net_from_json(const json& j) {
  require_object(j, "net", {"base_mean_ms", "base_sd_ms", "tail_mean_ms", "tail_sd_ms", "tail_fraction",
                            "delta_ms", "gst_ms", "pre_gst_max_delay_ms"});
  NetConfig c;
  read(j, "base_mean_ms", c.base_mean_ms, "net");
  read(j, "base_sd_ms", c.base_sd_ms, "net");
  read(j, "tail_mean_ms", c.tail_mean_ms, "net");
  read(j, "tail_sd_ms", c.tail_sd_ms, "net");
  read(j, "tail_fraction", c.tail_fraction, "net");
  read(j, "delta_ms", c.delta_ms, "net");
  read(j, "gst_ms", c.gst_ms, "net");
  read(j, "pre_gst_max_delay_ms", c.pre_gst_max_delay_ms, "net");
  return c;
}

RbConfig rb_from_json(const json& j) {
  require_object(j, "broadcast", {"ideal", "pull_fanout", "pull_wait_ms", "pull_retry_ms", "cert_wait_ms"});
  RbConfig c;
  read(j, "ideal", c.ideal, "broadcast");
  read(j, "pull_fanout", c.pull_fanout, "broadcast");
  read(j, "pull_wait_ms", c.pull_wait_ms, "broadcast");
  read(j, "pull_retry_ms", c.pull_retry_ms, "broadcast");
  read(j, "cert_wait_ms", c.cert_wait_ms, "broadcast");
  return c;
}

double bandwidth_value(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_bandwidth(v.get<std::string>());
  throw ConfigError("bandwidth_caps: entries must be numbers or strings");
}

std::string fixed(double x, int precision) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << x;
  return out.str();
}

double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  // Nearest rank.
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(xs.size())));
  return xs[std::clamp<std::size_t>(rank, 1, xs.size()) - 1];
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  require_object(j, "config",
                 {"variant", "n", "f", "D", "lambda", "lambda_complete", "crypto_scheme", "vc_model", "payload_bytes",
                  "bandwidth_caps", "net", "broadcast", "rb_delta_ms", "timeout_ms", "byzantine", "rounds", "seed",
                  "repetitions", "horizon_ms"});
  ExperimentConfig c;
  try {
    if (j.contains("variant")) c.variant = parse_variant(read_string(j, "variant", "config"));
    if (j.contains("crypto_scheme")) c.scheme = parse_scheme(read_string(j, "crypto_scheme", "config"));
    if (j.contains("vc_model")) c.vc = parse_vc_model(read_string(j, "vc_model", "config"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  read(j, "n", c.n, "config");
  read(j, "D", c.D, "config");
  read(j, "lambda", c.lambda, "config");
  read(j, "lambda_complete", c.lambda_complete, "config");
  read(j, "payload_bytes", c.payload_bytes, "config");
  read(j, "rb_delta_ms", c.rb_delta_ms, "config");
  read(j, "timeout_ms", c.timeout_ms, "config");
  read(j, "rounds", c.rounds, "config");
  read(j, "seed", c.seed, "config");
  read(j, "repetitions", c.repetitions, "config");
  read(j, "horizon_ms", c.horizon_ms, "config");
  if (j.contains("f")) {
    std::uint32_t f = 0;
    read(j, "f", f, "config");
    if (f != max_faults(c.n)) throw ConfigError("config.f must equal floor((n-1)/3)");
  }
  if (j.contains("bandwidth_caps")) {
    const json& caps = j.at("bandwidth_caps");
    if (!caps.is_array() || caps.empty()) throw ConfigError("bandwidth_caps: expected a non-empty array");
    c.bandwidth_caps.clear();
    for (const auto& v : caps) c.bandwidth_caps.push_back(bandwidth_value(v));
  }
  if (j.contains("net")) c.net = net_from_json(j.at("net"));
  if (j.contains("broadcast")) c.rb = rb_from_json(j.at("broadcast"));
  if (j.contains("byzantine")) {
    const json& b = j.at("byzantine");
    if (!b.is_object()) throw ConfigError("byzantine: expected an object of index -> strategy");
    for (const auto& [k, v] : b.items()) {
      std::uint32_t idx = 0;
      try {
        std::size_t used = 0;
        idx = static_cast<std::uint32_t>(std::stoul(k, &used));
        if (used != k.size()) throw std::invalid_argument(k);
        if (!v.is_string()) throw ConfigError("byzantine." + k + ": expected a strategy string");
        c.byzantine[idx] = Strategy::parse(v.get<std::string>());
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError("byzantine." + k + ": " + e.what());
      }
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json j;
  j["variant"] = std::string(to_string(variant));
  j["n"] = n;
  j["f"] = f();
  j["D"] = D;
  j["lambda"] = lambda;
  j["lambda_complete"] = lambda_complete;
  j["crypto_scheme"] = std::string(to_string(scheme));
  j["vc_model"] = std::string(to_string(vc));
  j["payload_bytes"] = payload_bytes;
  j["bandwidth_caps"] = bandwidth_caps;
  j["net"] = {{"base_mean_ms", net.base_mean_ms},   {"base_sd_ms", net.base_sd_ms},
              {"tail_mean_ms", net.tail_mean_ms},   {"tail_sd_ms", net.tail_sd_ms},
              {"tail_fraction", net.tail_fraction}, {"delta_ms", net.delta_ms},
              {"gst_ms", net.gst_ms},               {"pre_gst_max_delay_ms", net.pre_gst_max_delay_ms}};
  j["broadcast"] = {{"ideal", rb.ideal},
                    {"pull_fanout", rb.pull_fanout},
                    {"pull_wait_ms", rb.pull_wait_ms},
                    {"pull_retry_ms", rb.pull_retry_ms},
                    {"cert_wait_ms", rb.cert_wait_ms}};
  j["rb_delta_ms"] = effective_rb_delta_ms();
  j["timeout_ms"] = effective_timeout_ms();
  json byz = json::object();
  for (const auto& [i, s] : byzantine) byz[std::to_string(i)] = s.to_string();
  j["byzantine"] = byz;
  j["rounds"] = rounds;
  j["seed"] = seed;
  j["repetitions"] = repetitions;
  j["horizon_ms"] = horizon_ms;
  return j;
}

void ExperimentConfig::validate() const {
  try {
    protocol().validate();
    net.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (double b : bandwidth_caps)
    if (!(b >= 0)) throw ConfigError("bandwidth caps must be >= 0");
  if (rounds < 2) throw ConfigError("rounds must be at least 2");
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (byzantine.size() > f()) throw ConfigError("more Byzantine validators than f");
  for (const auto& [i, s] : byzantine)
    if (i >= n) throw ConfigError("byzantine index " + std::to_string(i) + " out of range");
  if (rb.pull_fanout < 1) throw ConfigError("broadcast.pull_fanout must be positive");
}

ProtocolConfig ExperimentConfig::protocol() const {
  ProtocolConfig p;
  p.variant = variant;
  p.n = n;
  p.f = f();
  p.D = D;
  p.lambda = lambda;
  p.lambda_complete = lambda_complete;
  p.delta_ms = effective_rb_delta_ms();
  p.timeout_ms = effective_timeout_ms();
  p.gst_ms = net.gst_ms;
  p.scheme = scheme;
  p.payload_bytes = payload_bytes;
  return p;
}

SimulationConfig ExperimentConfig::simulation(double bandwidth, std::uint64_t run_seed) const {
  SimulationConfig s;
  s.protocol = protocol();
  s.net = net;
  s.net.bandwidth_bytes_per_sec = bandwidth;
  s.rb = rb;
  s.vc = vc;
  s.roster.assign(n, Strategy{});
  for (const auto& [i, st] : byzantine) s.roster[i] = st;
  s.rounds = rounds;
  s.seed = run_seed;
  s.horizon_ms = horizon_ms;
  return s;
}

Digest ExperimentConfig::digest() const {
  Hasher h(HashDomain::config);
  h.update(to_json().dump());
  return h.finish();
}

std::uint64_t ExperimentConfig::run_seed(double bandwidth, std::uint32_t rep) const {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &bandwidth, sizeof bits);
  Hasher h(HashDomain::rng);
  h.update(digest()).update_u64(bits).update_u32(rep);
  return digest_prefix_u64(h.finish());
}

double parse_bandwidth(const std::string& s) {
  if (s == "unlimited" || s == "inf") return 0.0;
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad bandwidth '" + s + "'");
  }
  std::string unit = s.substr(used);
  double scale = 1.0;
  if (unit.empty() || unit == "B") {
    scale = 1.0;
  } else if (unit == "KB") {
    scale = 1e3;
  } else if (unit == "MB") {
    scale = 1e6;
  } else if (unit == "GB") {
    scale = 1e9;
  } else {
    throw ConfigError("bad bandwidth unit in '" + s + "'");
  }
  if (!(x > 0)) throw ConfigError("bandwidth must be positive or 'unlimited'");
  return x * scale;
}

std::string format_bandwidth(double b) {
  if (b <= 0) return "unlimited";
  if (b >= 1e6 && std::fmod(b, 1e6) == 0) return fixed(b / 1e6, 0) + "MB";
  return fixed(b, 0);
}

MetricsRecord collect_metrics(const Simulation& s, const ExperimentConfig& cfg, double bandwidth) {
  MetricsRecord m;
  m.variant = cfg.variant;
  m.n = cfg.n;
  m.f = cfg.f();
  m.D = cfg.variant == Variant::sparse ? cfg.D : 2 * cfg.f() + 1;
  m.lambda = cfg.lambda;
  m.scheme = cfg.scheme;
  m.bandwidth_bps = bandwidth;
  m.seed = s.config().seed;
  m.rounds = cfg.rounds;
  m.sim_seconds = to_ms(s.reached_at()) / 1000.0;
  m.events = s.sim().events_processed();

  const auto correct = s.correct_validators();
  const Time cutoff = s.reached_at();
  std::uint64_t ordered = 0;
  std::vector<double> lat;
  for (auto v : correct) {
    const Validator& val = s.validator(v);
    const auto& times = val.log_times();
    ordered += static_cast<std::uint64_t>(std::upper_bound(times.begin(), times.end(), cutoff) - times.begin());
    for (const auto& [round, l] : val.commit_latencies()) {
      if (round + 2 <= cfg.rounds) lat.push_back(to_ms(l));
    }
  }
  if (m.sim_seconds > 0 && !correct.empty()) m.throughput = static_cast<double>(ordered) / m.sim_seconds / correct.size();
  if (!lat.empty()) {
    double sum = 0;
    for (double x : lat) sum += x;
    m.latency_mean_ms = sum / static_cast<double>(lat.size());
    m.latency_p50_ms = percentile(lat, 0.50);
    m.latency_p95_ms = percentile(lat, 0.95);
  }

  const TrafficLedger& ledger = s.ledger();
  double meta = 0, total = 0;
  for (auto v : correct) {
    for (Round r = 1; r <= cfg.rounds; ++r) {
      for (std::size_t c = 0; c < kTrafficCategories; ++c) {
        const auto bytes = static_cast<double>(ledger.get(v, r, static_cast<TrafficCategory>(c)));
        total += bytes;
        if (static_cast<TrafficCategory>(c) == TrafficCategory::vertex_metadata) meta += bytes;
      }
    }
  }
  const double denom = static_cast<double>(correct.size()) * static_cast<double>(cfg.rounds);
  m.egress_metadata_per_round = meta / denom;
  m.egress_total_per_round = total / denom;

  if (!correct.empty()) {
    const Validator& first = s.validator(correct.front());
    const auto& log = first.log();
    const auto& anchors = first.log_anchor_rounds();
    for (std::size_t i = 0; i < log.size(); ++i) {
      if (log[i].round == 0) continue;
      ++m.inclusion[static_cast<std::uint32_t>(anchors[i] - log[i].round)];
    }
  }

  m.audit = audit_simulation(s);
  m.audit_ok = m.audit.ok();
  return m;
}

MetricsRecord run_experiment(const ExperimentConfig& cfg, double bandwidth, std::uint64_t seed,
                             const RunOptions& opts) {
  SimulationConfig sc = cfg.simulation(bandwidth, seed);
  sc.event_stream = opts.event_stream;
  Simulation s(sc);
  s.run();
  MetricsRecord m = collect_metrics(s, cfg, bandwidth);
  if (!m.audit_ok && opts.fail_on_audit) {
    const std::string what = "audit failed (seed " + std::to_string(seed) + "): " + m.audit.summary();
    throw AuditFailed(std::move(m), what);
  }
  return m;
}

std::vector<MetricsRecord> run_all(const ExperimentConfig& cfg, const RunOptions& opts) {
  std::vector<MetricsRecord> out;
  for (double bw : cfg.bandwidth_caps) {
    for (std::uint32_t rep = 0; rep < cfg.repetitions; ++rep) {
      out.push_back(run_experiment(cfg, bw, cfg.run_seed(bw, rep), opts));
    }
  }
  return out;
}

std::vector<SweepPoint> parse_sample_list(const std::string& s) {
  std::vector<SweepPoint> out;
  for (const auto& item : split(s, ',')) {
    if (item == "baseline") {
      out.emplace_back(std::nullopt);
      continue;
    }
    std::size_t used = 0;
    unsigned long d = 0;
    try {
      d = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || d == 0) throw ConfigError("bad sample size '" + item + "'");
    out.emplace_back(static_cast<std::uint32_t>(d));
  }
  if (out.empty()) throw ConfigError("empty sample list");
  return out;
}

std::vector<double> parse_bandwidth_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_bandwidth(item));
  if (out.empty()) throw ConfigError("empty bandwidth list");
  return out;
}

std::vector<MetricsRecord> sweep(const ExperimentConfig& base, const std::vector<SweepPoint>& samples,
                                 const std::vector<double>& bandwidths, const RunOptions& opts) {
  std::vector<MetricsRecord> out;
  for (const auto& point : samples) {
    ExperimentConfig c = base;
    if (point) {
      c.variant = Variant::sparse;
      c.D = *point;
    } else {
      c.variant = Variant::baseline;
    }
    c.bandwidth_caps = bandwidths;
    c.validate();
    auto recs = run_all(c, opts);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

std::string to_csv(const std::vector<MetricsRecord>& records) {
  std::ostringstream out;
  out << kRunCsvHeader << '\n';
  for (const auto& m : records) {
    out << to_string(m.variant) << ',' << m.n << ',' << m.f << ',' << m.D << ',' << m.lambda << ','
        << to_string(m.scheme) << ',' << fixed(m.bandwidth_bps, 0) << ',' << m.seed << ',' << m.rounds << ','
        << fixed(m.throughput, 3) << ',' << fixed(m.latency_mean_ms, 3) << ',' << fixed(m.latency_p50_ms, 3) << ','
        << fixed(m.latency_p95_ms, 3) << ',' << fixed(m.egress_metadata_per_round, 1) << ','
        << fixed(m.egress_total_per_round, 1) << ',' << (m.audit_ok ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string inclusion_csv(const std::map<std::uint32_t, std::uint64_t>& counts) {
  std::ostringstream out;
  out << "latency_rounds,count\n";
  for (const auto& [k, c] : counts) out << k << ',' << c << '\n';
  return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace sbs
