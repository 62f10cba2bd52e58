#include "vcubeps/metrics.hpp"

#include "vcubeps/simnet.hpp"

namespace vcubeps {

int queue_bucket(double v) {
  if (v <= 0.0) return 0;
  for (int i = 1; i < 8; ++i)
    if (v <= kQueueBucketEdges[i]) return i;
  return 8;
}

std::string queue_bucket_label(int b) {
  switch (b) {
    case 0: return "0";
    case 1: return "(0,2]";
    case 2: return "(2,4]";
    case 3: return "(4,8]";
    case 4: return "(8,16]";
    case 5: return "(16,32]";
    case 6: return "(32,4096]";
    case 7: return "(4096,8192]";
    default: return "(8192,inf)";
  }
}

RunMetrics MetricsCollector::finalize(const Engine& engine,
                                      std::string scenario, std::string system,
                                      std::uint32_t nodes, std::uint64_t seed) {
  run_.scenario = std::move(scenario);
  run_.system = std::move(system);
  run_.nodes = nodes;
  run_.seed = seed;
  run_.quiescence_time = engine.now();
  run_.events = engine.events_processed();
  run_.node_queues.clear();
  run_.node_queues.reserve(engine.node_count());
  for (auto& c : run_.queue_bucket_counts) c = 0;
  for (NodeId n = 0; n < engine.node_count(); ++n) {
    const NodeQueueStats& st = engine.queue_stats(n);
    NodeQueueSummary s{st.mean_queue(), st.peak_backlog};
    run_.node_queues.push_back(s);
    ++run_.queue_bucket_counts[static_cast<std::size_t>(queue_bucket(s.mean))];
  }
  return run_;
}

Aggregate aggregate(const std::vector<RunMetrics>& runs) {
  if (runs.empty()) throw ArgumentError("aggregate: no runs");
  Aggregate a;
  a.runs = runs.size();
  for (const auto& r : runs) {
    a.reception_latency_mean.add(r.reception_latency.mean());
    a.delivery_latency_mean.add(r.delivery_latency.mean());
    a.pub_copies.add(static_cast<double>(r.pub_copies_sent));
    a.false_positives.add(static_cast<double>(r.false_positives));
    if (r.tree_phase_latency.count)
      a.tree_phase_mean.add(r.tree_phase_latency.mean());
    if (r.bs_phase_latency.count) a.bs_phase_mean.add(r.bs_phase_latency.mean());
    if (r.delivery_delay.count) a.zero_delay_fraction.add(r.zero_delay_fraction());
    const double total =
        static_cast<double>(r.nodes ? r.nodes : std::uint32_t{1});
    for (int b = 0; b < kQueueBuckets; ++b)
      a.mean_bucket_fractions[static_cast<std::size_t>(b)] +=
          static_cast<double>(r.queue_bucket_counts[static_cast<std::size_t>(b)]) /
          total / static_cast<double>(runs.size());
    for (const auto& [sz, n] : r.cb_size_hist) a.cb_size_hist[sz] += n;
  }
  return a;
}

}  // namespace vcubeps
