#pragma once

#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "vcubeps/core.hpp"
#include "vcubeps/topology.hpp"

// The VCube-PS node state machine. Each handler is run-to-completion: a
// message (or application call) goes in, state changes, and outbound sends /
// deliveries / completions come out through Effects. The blocking propagation
// task of the original formulation is rendered as a per-topic
// `propagation_busy` flag plus an explicit pump: a node transmits broadcast
// k+1 only after the root ACK ledger for broadcast k drained.
//
// A NodeState is single-threaded: exactly one handler runs against it at a
// time; the driving engine serializes per-node events.

namespace vcubeps {

/// View: at most one entry per node, the one with the largest reg counter.
using ViewMap = std::map<NodeId, std::pair<ViewOp, Counter>>;

/// UPDATE of Algorithm 2: union keeping the larger reg counter per node.
void update_view(ViewMap& view, const std::vector<ViewEntry>& incoming);
std::vector<ViewEntry> view_to_entries(const ViewMap& view);

struct PendingDelivery {
  std::vector<CbEntry> cb;
  ProtocolMessage msg;
};

struct AckLedgerEntry {
  std::optional<NodeId> parent;  // nullopt at the broadcast root
  std::uint32_t pending = 0;
  MsgKind acked_kind = MsgKind::Pub;
  ViewMap gathered;  // membership piggybacked by ACKs from below
};

struct TopicState {
  ViewMap view;
  std::deque<ProtocolMessage> br_queue;
  std::vector<CbEntry> causal_barrier;  // sorted, deduped
  std::map<std::pair<NodeId, Counter>, PendingDelivery> not_delvs;
  std::map<NodeId, Counter> last_delvs;
  std::map<NodeId, Counter> first_rec;
  bool propagation_busy = false;
  bool task_active = false;
};

class Node {
 public:
  Node(NodeId self, HypercubeConfig cfg) : self_(self), cfg_(cfg) {
    topology::check_node(self, cfg);
  }

  NodeId id() const { return self_; }
  const HypercubeConfig& config() const { return cfg_; }

  // Application interface (Algorithm 1). NOK is a normal return.
  OpResult subscribe(TopicId t, Effects& fx);
  OpResult unsubscribe(TopicId t, Effects& fx);
  OpResult publish(TopicId t, std::uint32_t payload_size, Effects& fx);

  // Network interface (Algorithm 2, HANDLE_RECEIVED_MSG).
  void on_receive(const ProtocolMessage& m, NodeId from, Effects& fx);

  bool is_subscribed(TopicId t) const;

  /// Install an established subscription without running the join protocol:
  /// own entry (when self is a member), full member view, active task.
  /// Counters are advanced as if the SUB had been broadcast and acked; `rc`
  /// is the registration counter recorded for every member (scenarios use
  /// the topic index so multi-topic warm starts stay consistent).
  void warm_subscribe(TopicId t, const std::vector<NodeId>& members,
                      Counter rc = 0);

  /// Subscriber set per this node's current view of t (sorted).
  std::vector<NodeId> view_subscribers(TopicId t) const;

  // Introspection for tests and run-end validation.
  const TopicState* topic_state(TopicId t) const;
  TopicState& topic_state_mut(TopicId t) { return topic(t); }
  const std::map<std::tuple<NodeId, TopicId, Counter>, AckLedgerEntry>&
  ack_ledger() const {
    return acks_;
  }
  Counter counter() const { return counter_; }
  bool quiescent() const;  // no pending work anywhere

  /// CHECKCB: pure query, true iff every cb entry is delivered or provably
  /// unreceivable.
  static bool check_cb(const TopicState& ts, const std::vector<CbEntry>& cb);

 private:
  TopicState& topic(TopicId t);
  void co_broadcast(MsgKind kind, TopicId t, std::uint32_t payload_size,
                    Effects& fx);
  void pump(TopicId t, Effects& fx);
  // Returns true if the task exited (UNS completed with empty queue).
  bool post_wait(TopicId t, MsgKind kind);
  void check_delivery(TopicId t, Effects& fx);
  void send_acks(NodeId parent, ProtocolMessage ack, Effects& fx);
  std::vector<NodeId> route_children(const ProtocolMessage& m, int h) const;

  NodeId self_;
  HypercubeConfig cfg_;
  Counter counter_ = 0;
  std::map<TopicId, TopicState> topics_;
  std::map<std::tuple<NodeId, TopicId, Counter>, AckLedgerEntry> acks_;
};

}  // namespace vcubeps
