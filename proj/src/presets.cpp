#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "vcubeps/scenarios.hpp"

// Named reproductions of the paper's figures and table. Each preset prints
// its assumption manifest, writes a CSV table and a JSON report to the
// output directory, and fails (nonzero) if any validated run reports an
// oracle violation.

namespace vcubeps {

namespace {

using nlohmann::json;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void print(std::ostream& os) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        os << (i ? "," : "") << row[i];
      os << '\n';
    }
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

json metrics_to_json(const RunMetrics& m) {
  json j;
  j["scenario"] = m.scenario;
  j["system"] = m.system;
  j["nodes"] = m.nodes;
  j["seed"] = m.seed;
  j["reception_latency_mean"] = m.reception_latency.mean();
  j["reception_latency_max"] = m.reception_latency.max;
  j["delivery_latency_mean"] = m.delivery_latency.mean();
  j["zero_delay_fraction"] = m.zero_delay_fraction();
  j["messages_published"] = m.messages_published;
  j["pub_copies_sent"] = m.pub_copies_sent;
  j["false_positives"] = m.false_positives;
  j["tree_phase_mean"] = m.tree_phase_latency.mean();
  j["bs_phase_mean"] = m.bs_phase_latency.mean();
  j["quiescence_time"] = m.quiescence_time;
  j["events"] = m.events;
  json hist = json::object();
  for (const auto& [sz, n] : m.cb_size_hist) hist[std::to_string(sz)] = n;
  j["cb_size_hist"] = hist;
  json buckets = json::object();
  for (int b = 0; b < kQueueBuckets; ++b)
    buckets[queue_bucket_label(b)] =
        m.queue_bucket_counts[static_cast<std::size_t>(b)];
  j["queue_buckets"] = buckets;
  return j;
}

struct PresetContext {
  std::string out_dir;
  json runs_json = json::array();
  Table table;
  std::uint64_t violations = 0;
  bool manifest_printed = false;

  void note(const RunConfig& cfg, const RunOutput& out) {
    if (!manifest_printed) {
      std::cout << assumption_manifest(cfg);
      manifest_printed = true;
    }
    json j = metrics_to_json(out.metrics);
    j["oracle_ran"] = out.oracle_ran;
    j["oracle_violations"] = out.oracle_report.violations.size();
    runs_json.push_back(j);
    if (out.oracle_ran) violations += out.oracle_report.violations.size();
    if (out.oracle_ran && !out.oracle_report.ok()) {
      for (const auto& v : out.oracle_report.violations)
        std::cerr << "oracle violation [" << v.checker << "] " << v.detail
                  << '\n';
    }
  }

  int finish(const std::string& name) {
    namespace fs = std::filesystem;
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      std::ofstream csv(fs::path(out_dir) / (name + ".csv"));
      table.print(csv);
      json top;
      top["preset"] = name;
      top["schema_version"] = 1;
      top["runs"] = runs_json;
      std::ofstream js(fs::path(out_dir) / (name + ".json"));
      js << top.dump(2) << '\n';
    }
    table.print(std::cout);
    if (violations) {
      std::cerr << name << ": " << violations << " oracle violation(s)\n";
      return 1;
    }
    return 0;
  }
};

std::vector<RunMetrics> repeat_runs(PresetContext& ctx, RunConfig cfg,
                                    int runs, std::uint64_t seed) {
  std::vector<RunMetrics> ms;
  for (int i = 0; i < runs; ++i) {
    cfg.seed = seed + static_cast<std::uint64_t>(i);
    cfg.run_id = static_cast<std::uint32_t>(i);
    RunOutput out = run_scenario(cfg);
    ctx.note(cfg, out);
    ms.push_back(out.metrics);
  }
  return ms;
}

int preset_fig4a(PresetContext& ctx, std::uint64_t seed, int runs) {
  ctx.table.header = {"system",       "nodes",          "subscriber_pct",
                      "runs",         "latency_mean",   "latency_sigma",
                      "pub_copies",   "false_positives"};
  for (const std::string sys : {"vcube", "srpt-s"}) {
    RunConfig cfg;
    cfg.scenario = "single_publisher";
    cfg.system = sys;
    cfg.nodes = 4096;
    cfg.subscriber_pct = 25;
    cfg.trace_mode = TraceMode::PubOnly;
    auto ms = repeat_runs(ctx, cfg, runs > 0 ? runs : 40, seed);
    auto agg = aggregate(ms);
    ctx.table.rows.push_back({sys, "4096", "25",
                              std::to_string(ms.size()),
                              fmt(agg.reception_latency_mean.mean()),
                              fmt(agg.reception_latency_mean.stddev()),
                              fmt(agg.pub_copies.mean()),
                              fmt(agg.false_positives.mean())});
  }
  return 0;
}

int preset_fig5(PresetContext& ctx, std::uint64_t seed, int runs,
                std::uint32_t nodes) {
  ctx.table.header = {"system", "nodes", "subscriber_pct", "latency_mean",
                      "false_positives"};
  for (const std::string sys : {"vcube", "srpt-s"}) {
    for (double pct : {10.0, 25.0, 50.0, 75.0, 100.0}) {
      RunConfig cfg;
      cfg.scenario = "single_publisher";
      cfg.system = sys;
      cfg.nodes = nodes;
      cfg.subscriber_pct = pct;
      cfg.trace_mode = TraceMode::PubOnly;
      auto ms = repeat_runs(ctx, cfg, runs > 0 ? runs : 5, seed);
      auto agg = aggregate(ms);
      ctx.table.rows.push_back({sys, std::to_string(nodes), fmt(pct),
                                fmt(agg.reception_latency_mean.mean()),
                                fmt(agg.false_positives.mean())});
    }
  }
  return 0;
}

int preset_table1(PresetContext& ctx, std::uint64_t seed, int runs) {
  ctx.table.header = {"system", "bucket", "mean_node_count"};
  for (const std::string sys : {"vcube", "srpt-s"}) {
    RunConfig cfg;
    cfg.scenario = "several_publishers";
    cfg.system = sys;
    cfg.nodes = 1024;
    cfg.publisher_pct = 100;
    cfg.trace_mode = TraceMode::PubOnly;
    auto ms = repeat_runs(ctx, cfg, runs > 0 ? runs : 5, seed);
    auto agg = aggregate(ms);
    for (int b = 0; b < kQueueBuckets; ++b)
      ctx.table.rows.push_back(
          {sys, queue_bucket_label(b),
           fmt(agg.mean_bucket_fractions[static_cast<std::size_t>(b)] *
               1024.0)});
  }
  return 0;
}

int preset_fig6(PresetContext& ctx, std::uint64_t seed, int runs) {
  ctx.table.header = {"system", "nodes", "publisher_pct", "ratio",
                      "latency_mean"};
  for (const std::string sys : {"vcube", "srpt-s"}) {
    for (std::uint32_t n : {256u, 1024u}) {
      for (double pct : {25.0, 100.0}) {
        for (int ratio : {100, 1000}) {
          RunConfig cfg;
          cfg.scenario = "several_publishers";
          cfg.system = sys;
          cfg.nodes = n;
          cfg.publisher_pct = pct;
          cfg.ratio = ratio;
          cfg.trace_mode = TraceMode::PubOnly;
          auto ms = repeat_runs(ctx, cfg, runs > 0 ? runs : 2, seed);
          auto agg = aggregate(ms);
          ctx.table.rows.push_back({sys, std::to_string(n), fmt(pct),
                                    std::to_string(ratio),
                                    fmt(agg.reception_latency_mean.mean())});
        }
      }
    }
  }
  return 0;
}

int preset_fig7(PresetContext& ctx, std::uint64_t seed, int runs) {
  ctx.table.header = {"wait_p", "cb_size", "fraction"};
  for (std::uint32_t wp : {1u, 10u}) {
    RunConfig cfg;
    cfg.scenario = "message_order";
    cfg.nodes = 256;
    cfg.wait_p = wp;
    cfg.trace_mode = TraceMode::PubOnly;
    auto ms = repeat_runs(ctx, cfg, runs > 0 ? runs : 5, seed);
    auto agg = aggregate(ms);
    std::uint64_t total = 0;
    for (const auto& [sz, n] : agg.cb_size_hist) total += n;
    for (const auto& [sz, n] : agg.cb_size_hist)
      ctx.table.rows.push_back(
          {std::to_string(wp), std::to_string(sz),
           fmt(static_cast<double>(n) / static_cast<double>(total))});
    ctx.table.rows.push_back({std::to_string(wp), "zero_delay_fraction",
                              fmt(agg.zero_delay_fraction.mean())});
  }
  return 0;
}

int preset_fig8(PresetContext& ctx, std::uint64_t seed, int runs) {
  ctx.table.header = {"system", "dist", "messages", "latency_mean"};
  for (const std::string sys : {"vcube", "srpt-s"}) {
    for (const std::string dist : {"uniform", "zipf"}) {
      RunConfig cfg;
      cfg.scenario = "multi_topic";
      cfg.system = sys;
      cfg.nodes = 256;
      cfg.topics = 128;
      cfg.messages = 1u << 14;
      cfg.dist = dist;
      cfg.trace_mode = TraceMode::None;
      cfg.validate = false;
      auto ms = repeat_runs(ctx, cfg, runs > 0 ? runs : 3, seed);
      auto agg = aggregate(ms);
      ctx.table.rows.push_back({sys, dist, std::to_string(cfg.messages),
                                fmt(agg.reception_latency_mean.mean())});
      // validation twin at a budget the oracle can chew through
      RunConfig twin = cfg;
      twin.messages = 2048;
      twin.trace_mode = TraceMode::PubOnly;
      twin.validate = true;
      twin.seed = seed + 900;
      RunOutput out = run_scenario(twin);
      ctx.note(twin, out);
    }
  }
  return 0;
}

int preset_fig9(PresetContext& ctx, std::uint64_t seed, int runs) {
  ctx.table.header = {"system",        "churn_pct", "latency_mean",
                      "false_positives", "runs"};
  for (const std::string sys : {"vcube", "srpt-s"}) {
    for (double churn : {12.5, 25.0}) {
      RunConfig cfg;
      cfg.scenario = "churn";
      cfg.system = sys;
      cfg.nodes = 2048;
      cfg.churn_pct = churn;
      cfg.trace_mode = TraceMode::PubOnly;
      auto ms = repeat_runs(ctx, cfg, runs > 0 ? runs : 1, seed);
      auto agg = aggregate(ms);
      ctx.table.rows.push_back({sys, fmt(churn),
                                fmt(agg.reception_latency_mean.mean()),
                                fmt(agg.false_positives.mean()),
                                std::to_string(ms.size())});
    }
  }
  return 0;
}

int preset_fig10(PresetContext& ctx, std::uint64_t seed, int runs) {
  ctx.table.header = {"system", "brokers", "latency_mean", "tree_mean",
                      "bs_mean"};
  auto row = [&](const std::string& sys, std::uint32_t brokers) {
    RunConfig cfg;
    cfg.scenario = "broker_compare";
    cfg.system = sys;
    cfg.nodes = 4096;
    cfg.brokers = brokers;
    cfg.messages = 128;
    cfg.trace_mode = TraceMode::PubOnly;
    auto ms = repeat_runs(ctx, cfg, runs > 0 ? runs : 3, seed);
    auto agg = aggregate(ms);
    ctx.table.rows.push_back(
        {sys, brokers ? std::to_string(brokers) : "-",
         fmt(agg.reception_latency_mean.mean()),
         brokers ? fmt(agg.tree_phase_mean.mean()) : "-",
         brokers ? fmt(agg.bs_phase_mean.mean()) : "-"});
  };
  row("vcube", 0);
  row("srpt-s", 0);
  for (std::uint32_t b : {32u, 256u, 2048u}) row("srpt-b", b);
  return 0;
}

int preset_correctness(PresetContext& ctx, std::uint64_t seed, int runs) {
  ctx.table.header = {"runs", "violations"};
  const int total = runs > 0 ? runs : 500;
  const std::uint32_t sizes[] = {8, 16, 32, 64, 128};
  std::uint64_t violations = 0;
  for (int i = 0; i < total; ++i) {
    RunConfig cfg;
    cfg.scenario = "random_schedule";
    cfg.nodes = sizes[static_cast<std::size_t>(i) % 5];
    cfg.topics = 1 + static_cast<std::uint32_t>(i % 2);
    cfg.schedule_ops = 30 + static_cast<std::uint32_t>(i % 3) * 15;
    cfg.serialized_membership = i % 3 == 0;
    cfg.seed = seed + static_cast<std::uint64_t>(i);
    RunOutput out = run_scenario(cfg);
    ctx.note(cfg, out);
    violations += out.oracle_report.violations.size();
    if (!out.quiescent || !out.liveness_issues.empty()) ++violations;
  }
  ctx.table.rows.push_back({std::to_string(total), std::to_string(violations)});
  return violations ? 1 : 0;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"paper-fig-4a", "paper-fig-5",  "paper-fig-5-8192",
          "paper-table-1", "paper-fig-6", "paper-fig-7",
          "paper-fig-8",  "paper-fig-9",  "paper-fig-10",
          "correctness-suite"};
}

int run_preset(const std::string& name, const std::string& out_dir,
               std::uint64_t seed, int runs_override) {
  PresetContext ctx;
  ctx.out_dir = out_dir;
  int rc = 1;
  if (name == "paper-fig-4a")
    rc = preset_fig4a(ctx, seed, runs_override);
  else if (name == "paper-fig-5")
    rc = preset_fig5(ctx, seed, runs_override, 4096);
  else if (name == "paper-fig-5-8192")
    rc = preset_fig5(ctx, seed, runs_override, 8192);
  else if (name == "paper-table-1")
    rc = preset_table1(ctx, seed, runs_override);
  else if (name == "paper-fig-6")
    rc = preset_fig6(ctx, seed, runs_override);
  else if (name == "paper-fig-7")
    rc = preset_fig7(ctx, seed, runs_override);
  else if (name == "paper-fig-8")
    rc = preset_fig8(ctx, seed, runs_override);
  else if (name == "paper-fig-9")
    rc = preset_fig9(ctx, seed, runs_override);
  else if (name == "paper-fig-10")
    rc = preset_fig10(ctx, seed, runs_override);
  else if (name == "correctness-suite")
    rc = preset_correctness(ctx, seed, runs_override);
  else
    throw ArgumentError("unknown preset: " + name);
  const int frc = ctx.finish(name);
  return rc != 0 ? rc : frc;
}

}  // namespace vcubeps
