#pragma once

#include <string>
#include <vector>

#include "vcubeps/metrics.hpp"
#include "vcubeps/oracle.hpp"
#include "vcubeps/simnet.hpp"
#include "vcubeps/trace.hpp"

// Scenario definitions reproducing the paper's experiments, plus the
// randomized correctness schedules used by the property suite. Each run is
// a pure function of its RunConfig (determinism contract).

namespace vcubeps {

enum class TraceMode { Full, PubOnly, None };

struct RunConfig {
  std::string scenario = "single_publisher";
  // single_publisher | several_publishers | message_order | multi_topic |
  // churn | broker_compare | random_schedule
  std::string system = "vcube";  // vcube | srpt-s | srpt-b
  std::uint32_t nodes = 8;
  std::uint64_t seed = 1;
  std::uint32_t run_id = 0;

  double subscriber_pct = 25.0;
  double publisher_pct = 100.0;
  std::uint32_t topics = 1;
  std::uint32_t wait_p = 1;
  std::uint64_t messages = 128;
  SimTime publish_interval = 500;
  double churn_pct = 12.5;
  SimTime churn_period = 300;
  std::uint32_t brokers = 32;
  std::string dist = "uniform";  // uniform | zipf
  double zipf_coeff = 0.825;
  int ratio = 100;  // t_pp = ratio (the paper's 1/100 and 1/1000 setups)

  // random_schedule knobs
  std::uint32_t schedule_ops = 40;
  bool serialized_membership = false;

  TraceMode trace_mode = TraceMode::Full;
  bool validate = true;  // run the oracle when the trace allows it
  std::uint64_t event_limit = Engine::kDefaultLimit;

  DelayModel delay_model() const {
    DelayModel dm;
    dm.t_pp = ratio;
    return dm;
  }
};

struct RunOutput {
  RunMetrics metrics;
  TraceHeader header;
  std::vector<TraceRecord> trace;
  bool oracle_ran = false;
  oracle::Report oracle_report;
  bool quiescent = true;
  std::vector<std::string> liveness_issues;
};

RunOutput run_scenario(const RunConfig& cfg);

/// The concretization choices this run depends on, printed alongside
/// results by every preset (criteria that depend on them say so).
std::string assumption_manifest(const RunConfig& cfg);

/// Named reproduction presets for the sweep command.
std::vector<std::string> preset_names();
int run_preset(const std::string& name, const std::string& out_dir,
               std::uint64_t seed, int runs_override);

}  // namespace vcubeps
