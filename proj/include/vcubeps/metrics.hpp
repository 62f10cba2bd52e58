#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vcubeps/core.hpp"

namespace vcubeps {

class Engine;

/// Running scalar summary (count/mean/min/max, σ via sum of squares).
struct Stats {
  std::uint64_t count = 0;
  double sum = 0, sumsq = 0;
  double min = 0, max = 0;

  void add(double v) {
    if (count == 0) {
      min = max = v;
    } else {
      if (v < min) min = v;
      if (v > max) max = v;
    }
    ++count;
    sum += v;
    sumsq += v * v;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double stddev() const {
    if (count < 2) return 0.0;
    const double m = mean();
    const double var = sumsq / static_cast<double>(count) - m * m;
    return var > 0 ? std::sqrt(var) : 0.0;
  }
};

/// Table-1 bucket edges. Index 0 is the exact-zero bucket, then
/// (0,2] (2,4] (4,8] (8,16] (16,32] (32,4096] (4096,8192] (8192,inf).
inline constexpr double kQueueBucketEdges[] = {0, 2, 4, 8, 16, 32, 4096, 8192};
inline constexpr int kQueueBuckets = 9;
int queue_bucket(double v);
std::string queue_bucket_label(int b);

struct NodeQueueSummary {
  double mean = 0;
  std::uint64_t peak = 0;
};

/// Everything one run reports.
struct RunMetrics {
  std::string scenario;
  std::string system;
  std::uint32_t nodes = 0;
  std::uint64_t seed = 0;

  Stats reception_latency;   // subscriber receptions, from publish() call
  Stats delivery_latency;    // deliveries, from publish() call
  Stats delivery_delay;      // t_d = delivery - reception (per delivery)
  std::uint64_t zero_delay_deliveries = 0;

  std::uint64_t messages_published = 0;
  std::uint64_t pub_copies_sent = 0;
  std::uint64_t false_positives = 0;
  std::map<std::uint32_t, std::uint64_t> cb_size_hist;

  std::vector<NodeQueueSummary> node_queues;
  std::vector<std::uint64_t> queue_bucket_counts =
      std::vector<std::uint64_t>(kQueueBuckets, 0);

  // SRPT-B phase decomposition
  Stats tree_phase_latency;
  Stats bs_phase_latency;

  SimTime quiescence_time = 0;
  std::uint64_t events = 0;

  double zero_delay_fraction() const {
    return delivery_delay.count
               ? static_cast<double>(zero_delay_deliveries) /
                     static_cast<double>(delivery_delay.count)
               : 0.0;
  }
};

/// Observes one run. Systems report publications, receptions and deliveries;
/// finalize() folds in the engine's queue statistics.
class MetricsCollector {
 public:
  void on_publish_call(const MsgId& id, SimTime t) {
    publish_time_[key(id)] = t;
    ++run_.messages_published;
  }
  void on_publish_cb(std::uint32_t cb_size) { ++run_.cb_size_hist[cb_size]; }
  void on_pub_copy() { ++run_.pub_copies_sent; }

  void on_reception(const MsgId& id, NodeId node, SimTime t, bool subscriber) {
    if (!subscriber) {
      ++run_.false_positives;
      return;
    }
    auto it = publish_time_.find(key(id));
    if (it == publish_time_.end()) return;
    run_.reception_latency.add(static_cast<double>(t - it->second));
    reception_time_[{key(id), node}] = t;
  }

  void on_delivery(const MsgId& id, NodeId node, SimTime t) {
    auto pt = publish_time_.find(key(id));
    if (pt == publish_time_.end()) return;
    if (id.source == node) return;  // publisher's own delivery
    run_.delivery_latency.add(static_cast<double>(t - pt->second));
    auto rt = reception_time_.find({key(id), node});
    if (rt != reception_time_.end()) {
      const SimTime td = t - rt->second;
      run_.delivery_delay.add(static_cast<double>(td));
      if (td == 0) ++run_.zero_delay_deliveries;
      reception_time_.erase(rt);
    }
  }

  // SRPT-B phases
  void on_tree_phase(SimTime latency) {
    run_.tree_phase_latency.add(static_cast<double>(latency));
  }
  void on_bs_phase(SimTime latency) {
    run_.bs_phase_latency.add(static_cast<double>(latency));
  }

  std::optional<SimTime> publish_time(const MsgId& id) const {
    auto it = publish_time_.find(key(id));
    if (it == publish_time_.end()) return std::nullopt;
    return it->second;
  }

  RunMetrics finalize(const Engine& engine, std::string scenario,
                      std::string system, std::uint32_t nodes,
                      std::uint64_t seed);

 private:
  static std::tuple<NodeId, TopicId, Counter> key(const MsgId& id) {
    return {id.source, id.topic, id.counter};
  }
  RunMetrics run_;
  std::map<std::tuple<NodeId, TopicId, Counter>, SimTime> publish_time_;
  std::map<std::pair<std::tuple<NodeId, TopicId, Counter>, NodeId>, SimTime>
      reception_time_;
};

/// Cross-run aggregation: mean/σ/min/max of per-run scalar summaries.
struct Aggregate {
  Stats reception_latency_mean;
  Stats delivery_latency_mean;
  Stats pub_copies;
  Stats false_positives;
  Stats tree_phase_mean;
  Stats bs_phase_mean;
  Stats zero_delay_fraction;
  std::vector<double> mean_bucket_fractions =
      std::vector<double>(kQueueBuckets, 0.0);
  std::map<std::uint32_t, std::uint64_t> cb_size_hist;
  std::uint64_t runs = 0;
};

Aggregate aggregate(const std::vector<RunMetrics>& runs);

}  // namespace vcubeps
