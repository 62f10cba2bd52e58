// Command-line front end: run single scenarios, validate traces against the
// oracle, or reproduce the named paper presets.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vcubeps/oracle.hpp"
#include "vcubeps/scenarios.hpp"

using namespace vcubeps;
using nlohmann::json;

namespace {

json report_to_json(const oracle::Report& rep) {
  json out;
  out["ok"] = rep.ok();
  json vs = json::array();
  for (const auto& v : rep.violations)
    vs.push_back({{"checker", v.checker}, {"detail", v.detail}});
  out["violations"] = vs;
  return out;
}

int cmd_run(const RunConfig& base, int runs, const std::string& out_dir,
            bool dump_trace) {
  namespace fs = std::filesystem;
  if (!out_dir.empty()) fs::create_directories(out_dir);
  std::cout << assumption_manifest(base);
  std::uint64_t violations = 0;
  std::ofstream csv;
  if (!out_dir.empty()) {
    csv.open(fs::path(out_dir) / "runs.csv");
    csv << "run,system,scenario,nodes,seed,latency_mean,latency_max,"
           "pub_copies,false_positives,zero_delay_fraction,quiescence,"
           "events,oracle_ran,oracle_violations\n";
  }
  for (int i = 0; i < runs; ++i) {
    RunConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(i);
    cfg.run_id = static_cast<std::uint32_t>(i);
    RunOutput out = run_scenario(cfg);
    const RunMetrics& m = out.metrics;
    std::cout << "run " << i << ": latency mean "
              << m.reception_latency.mean() << " u.t., max "
              << m.reception_latency.max << ", PUB copies "
              << m.pub_copies_sent << ", false positives "
              << m.false_positives << ", quiescence " << m.quiescence_time
              << " u.t.";
    if (out.oracle_ran)
      std::cout << ", oracle " << (out.oracle_report.ok() ? "ok" : "VIOLATED");
    std::cout << '\n';
    for (const auto& v : out.oracle_report.violations)
      std::cerr << "  [" << v.checker << "] " << v.detail << '\n';
    violations += out.oracle_report.violations.size();
    if (!out.quiescent) {
      std::cerr << "  run did not reach protocol quiescence\n";
      ++violations;
    }
    for (const auto& s : out.liveness_issues) {
      std::cerr << "  liveness: " << s << '\n';
      ++violations;
    }
    if (csv.is_open()) {
      csv << i << ',' << cfg.system << ',' << cfg.scenario << ','
          << cfg.nodes << ',' << cfg.seed << ',' << m.reception_latency.mean()
          << ',' << m.reception_latency.max << ',' << m.pub_copies_sent << ','
          << m.false_positives << ',' << m.zero_delay_fraction() << ','
          << m.quiescence_time << ',' << m.events << ',' << out.oracle_ran
          << ',' << out.oracle_report.violations.size() << '\n';
    }
    if (!out_dir.empty()) {
      json j;
      j["schema_version"] = 1;
      j["config"] = {{"scenario", cfg.scenario}, {"system", cfg.system},
                     {"nodes", cfg.nodes},       {"seed", cfg.seed},
                     {"messages", cfg.messages}, {"topics", cfg.topics}};
      j["latency_mean"] = m.reception_latency.mean();
      j["latency_max"] = m.reception_latency.max;
      j["pub_copies"] = m.pub_copies_sent;
      j["false_positives"] = m.false_positives;
      j["oracle"] = report_to_json(out.oracle_report);
      std::ofstream jf(fs::path(out_dir) /
                       ("run_" + std::to_string(i) + ".json"));
      jf << j.dump(2) << '\n';
    }
    if (dump_trace && !out_dir.empty()) {
      write_trace_file(
          (fs::path(out_dir) / ("trace_" + std::to_string(i) + ".log"))
              .string(),
          out.header, out.trace);
    }
  }
  return violations ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VCube-PS protocol simulator and experiment harness"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run one scenario configuration");
  RunConfig cfg;
  int runs = 1;
  std::string out_dir;
  bool dump_trace = false;
  std::string trace_mode = "auto";
  run->add_option("--scenario", cfg.scenario,
                  "single_publisher|several_publishers|message_order|"
                  "multi_topic|churn|broker_compare|random_schedule");
  run->add_option("--nodes", cfg.nodes, "node count (power of two)");
  run->add_option("--system", cfg.system, "vcube|srpt-s|srpt-b");
  run->add_option("--seed", cfg.seed, "base seed");
  run->add_option("--runs", runs, "number of seeded runs");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--subscriber-pct", cfg.subscriber_pct, "subscriber %");
  run->add_option("--publisher-pct", cfg.publisher_pct, "publisher %");
  run->add_option("--topics", cfg.topics, "topic count");
  run->add_option("--messages", cfg.messages, "message budget");
  run->add_option("--wait-p", cfg.wait_p, "seed messages (message_order)");
  run->add_option("--publish-interval", cfg.publish_interval,
                  "mean publish interval (u.t.)");
  run->add_option("--churn-pct", cfg.churn_pct, "churn percentage per wave");
  run->add_option("--churn-period", cfg.churn_period, "churn wave period");
  run->add_option("--brokers", cfg.brokers, "broker count (srpt-b)");
  run->add_option("--dist", cfg.dist, "zipf|uniform topic distribution");
  run->add_option("--ratio", cfg.ratio, "t_pp (100 or 1000)");
  run->add_option("--ops", cfg.schedule_ops, "ops (random_schedule)");
  run->add_flag("--serialized", cfg.serialized_membership,
                "serialize membership ops (random_schedule)");
  run->add_option("--trace-mode", trace_mode, "auto|full|pub|none");
  run->add_flag("--dump-trace", dump_trace, "write trace files to --out");

  // validate
  auto* validate = app.add_subcommand("validate", "replay a trace through "
                                                  "the oracle");
  std::string trace_path;
  bool no_mem_cov = false;
  validate->add_option("--trace", trace_path, "trace file")->required();
  validate->add_flag("--no-membership-coverage", no_mem_cov,
                     "skip SUB/UNS coverage (filtered traces)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a named reproduction preset");
  std::string preset;
  std::string sweep_out = "sweep-out";
  std::uint64_t sweep_seed = 1;
  int sweep_runs = 0;
  sweep->add_option("--preset", preset,
                    "one of: paper-fig-4a paper-fig-5 paper-fig-5-8192 "
                    "paper-table-1 paper-fig-6 paper-fig-7 paper-fig-8 "
                    "paper-fig-9 paper-fig-10 correctness-suite")
      ->required();
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--seed", sweep_seed, "base seed");
  sweep->add_option("--runs", sweep_runs, "override per-config run count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (trace_mode == "full") cfg.trace_mode = TraceMode::Full;
      else if (trace_mode == "pub") cfg.trace_mode = TraceMode::PubOnly;
      else if (trace_mode == "none") cfg.trace_mode = TraceMode::None;
      else cfg.trace_mode = cfg.nodes <= 512 ? TraceMode::Full
                                             : TraceMode::PubOnly;
      return cmd_run(cfg, runs, out_dir, dump_trace);
    }
    if (*validate) {
      auto [header, records] = read_trace_file(trace_path);
      oracle::TraceOracle orc(header, std::move(records));
      oracle::OracleOptions opt;
      opt.membership_coverage = !no_mem_cov;
      oracle::Report rep = orc.check_all(opt);
      std::cout << report_to_json(rep).dump(2) << '\n';
      return rep.ok() ? 0 : 1;
    }
    if (*sweep) return run_preset(preset, sweep_out, sweep_seed, sweep_runs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
