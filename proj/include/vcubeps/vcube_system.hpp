#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "vcubeps/metrics.hpp"
#include "vcubeps/node.hpp"
#include "vcubeps/simnet.hpp"
#include "vcubeps/trace.hpp"

// Drives one VCube-PS protocol automaton per node through the engine:
// translates handler effects into engine sends and trace/metric records.
// Application calls (subscribe/unsubscribe/publish) are scenario actions.

namespace vcubeps {

class VcubeSystem final : public MessageTarget {
 public:
  VcubeSystem(Engine& engine, HypercubeConfig cfg, TraceSink& trace,
              MetricsCollector* metrics = nullptr, std::uint32_t run_id = 0);

  OpResult do_subscribe(NodeId n, TopicId t);
  OpResult do_unsubscribe(NodeId n, TopicId t);
  OpResult do_publish(NodeId n, TopicId t, std::uint32_t payload_size = 0);

  /// Established membership without running join floods (see ledger).
  void warm_subscribe(TopicId t, const std::vector<NodeId>& members,
                      Counter rc = 0);

  void on_message(NodeId to, ProtocolMessage m, NodeId from,
                  SimTime now) override;

  /// Fired for every application delivery, including the publisher's own.
  using DeliveryListener =
      std::function<void(NodeId, const ProtocolMessage&, SimTime)>;
  void set_delivery_listener(DeliveryListener fn) { on_delivery_ = std::move(fn); }

  Node& node(NodeId n) { return *nodes_[n]; }
  const Node& node(NodeId n) const { return *nodes_[n]; }
  const HypercubeConfig& config() const { return cfg_; }

  /// Quiescence snapshot of every node's view of the given topics, emitted
  /// as `view` records in node order.
  void emit_view_snapshots(const std::vector<TopicId>& topics);

  bool all_quiescent() const;

  /// Liveness (quiescence form): subscribed nodes hold no undelivered
  /// messages. Returns one description per offending node.
  std::vector<std::string> undelivered_backlog(
      const std::vector<TopicId>& topics) const;

 private:
  void flush(NodeId self, Effects& fx);
  TraceRecord base_record(TraceKind kind, NodeId node) const;

  Engine& engine_;
  HypercubeConfig cfg_;
  TraceSink& trace_;
  MetricsCollector* metrics_;
  std::uint32_t run_id_;
  std::vector<std::unique_ptr<Node>> nodes_;
  DeliveryListener on_delivery_;
  Effects fx_;  // reused per handler
};

}  // namespace vcubeps
