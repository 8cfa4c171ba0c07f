// sbsim: run, sweep and audit Bullshark / Sparse Bullshark simulations.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "sbs/audit.hpp"
#include "sbs/harness.hpp"
#include "sbs/inclusion.hpp"

namespace {

void report(const std::vector<sbs::MetricsRecord>& recs) {
  for (const auto& m : recs) {
    std::cerr << sbs::to_string(m.variant) << " n=" << m.n << " D=" << m.D
              << " bw=" << sbs::format_bandwidth(m.bandwidth_bps) << " seed=" << m.seed
              << " throughput=" << m.throughput << "/s latency_p50=" << m.latency_p50_ms
              << "ms audit=" << (m.audit_ok ? "ok" : "FAILED") << '\n';
    if (!m.audit_ok) std::cerr << "  " << m.audit.summary() << '\n';
  }
}

int exit_code(const std::vector<sbs::MetricsRecord>& recs) {
  for (const auto& m : recs)
    if (!m.audit_ok) return 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Bullshark / Bullshark discrete-event simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path, eventlog_path;
  std::optional<std::uint64_t> seed;
  bool keep_going = false;
  auto* run = app.add_subcommand("run", "Run one experiment config (every bandwidth cap and repetition)");
  run->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_path, "CSV output (default: stdout)");
  run->add_option("--eventlog", eventlog_path, "Write the NDJSON event log of the run here");
  run->add_flag("--keep-going", keep_going, "Record audit failures in the CSV instead of aborting");

  std::string samples = "35,70,140", bandwidths = "5MB,10MB,unlimited", out_dir;
  auto* sw = app.add_subcommand("sweep", "Grid over sample sizes and bandwidth caps");
  sw->add_option("--config", config_path, "JSON base config")->required()->check(CLI::ExistingFile);
  sw->add_option("--samples", samples, "Sample sizes; 'baseline' adds the baseline variant");
  sw->add_option("--bandwidth", bandwidths, "Per-sender caps, e.g. 5MB,10MB,unlimited");
  sw->add_option("--out", out_dir, "Output directory")->required();
  sw->add_option("--seed", seed, "Override the config seed");
  sw->add_flag("--keep-going", keep_going, "Record audit failures in the CSV instead of aborting");

  sbs::InclusionConfig inc;
  std::uint32_t seeds = 1;
  auto* incl = app.add_subcommand("inclusion", "Inclusion-latency histogram of the sampled DAG");
  incl->add_option("--n", inc.n, "Validators")->capture_default_str();
  incl->add_option("--sample", inc.D, "Sampled parents per vertex")->capture_default_str();
  incl->add_option("--rounds", inc.rounds, "Rounds")->capture_default_str();
  incl->add_option("--seed", inc.seed, "Seed")->capture_default_str();
  incl->add_option("--seeds", seeds, "Aggregate this many consecutive seeds")->capture_default_str();
  incl->add_option("--anchor-period", inc.anchor_period, "Rounds between leaders")->capture_default_str();
  incl->add_option("--out", out_path, "CSV output (default: stdout)");

  double gst_ms = -1, delta_ms = -1;
  auto* aud = app.add_subcommand("audit", "Structural checks of an NDJSON event log");
  aud->add_option("--eventlog", eventlog_path, "Event log")->required()->check(CLI::ExistingFile);
  aud->add_option("--gst-ms", gst_ms, "Also check the post-GST delay bound (needs --delta-ms)");
  aud->add_option("--delta-ms", delta_ms, "Per-message delay bound after GST");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = sbs::ExperimentConfig::load(config_path);
      if (seed) cfg.seed = *seed;
      std::ofstream events;
      sbs::RunOptions opts;
      opts.fail_on_audit = !keep_going;
      if (!eventlog_path.empty()) {
        if (cfg.bandwidth_caps.size() * cfg.repetitions != 1) {
          std::cerr << "--eventlog needs a config with exactly one bandwidth cap and one repetition\n";
          return 2;
        }
        events.open(eventlog_path, std::ios::trunc);
        if (!events) throw std::runtime_error("cannot write " + eventlog_path);
        opts.event_stream = &events;
      }
      const auto recs = sbs::run_all(cfg, opts);
      report(recs);
      if (out_path.empty()) {
        std::cout << sbs::to_csv(recs);
      } else {
        sbs::write_file_atomic(out_path, sbs::to_csv(recs));
      }
      return exit_code(recs);
    }
    if (*sw) {
      auto cfg = sbs::ExperimentConfig::load(config_path);
      if (seed) cfg.seed = *seed;
      sbs::RunOptions opts;
      opts.fail_on_audit = !keep_going;
      const auto recs =
          sbs::sweep(cfg, sbs::parse_sample_list(samples), sbs::parse_bandwidth_list(bandwidths), opts);
      report(recs);
      sbs::write_file_atomic(std::filesystem::path(out_dir) / "sweep.csv", sbs::to_csv(recs));
      return exit_code(recs);
    }
    if (*incl) {
      sbs::InclusionHistogram h;
      for (std::uint32_t i = 0; i < seeds; ++i) {
        sbs::InclusionConfig c = inc;
        c.seed = inc.seed + i;
        h.merge(sbs::simulate_inclusion(c));
      }
      auto counts = h.counts;
      std::cerr << "vertices=" << h.total() << " censored=" << h.censored
                << " within_2_rounds=" << h.fraction_at_most(2) << '\n';
      const std::string csv = sbs::inclusion_csv(counts);
      if (out_path.empty()) {
        std::cout << csv;
      } else {
        sbs::write_file_atomic(out_path, csv);
      }
      return 0;
    }
    if (*aud) {
      std::ifstream in(eventlog_path);
      const auto a = sbs::audit_event_log(in, gst_ms, delta_ms);
      std::cout << "events=" << a.events << " deliveries=" << a.deliveries << " bytes=" << a.bytes
                << " verdict=" << (a.ok() ? "ok" : "FAILED") << '\n';
      for (const auto& f : a.failures) std::cout << "  " << f << '\n';
      return a.ok() ? 0 : 3;
    }
  } catch (const sbs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const sbs::AuditFailed& e) {
    std::cerr << e.what() << '\n';
    return 3;
  } catch (const sbs::Stalled& e) {
    std::cerr << "stalled: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
