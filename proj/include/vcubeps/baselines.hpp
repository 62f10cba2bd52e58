#pragma once

#include <map>
#include <set>
#include <vector>

#include "vcubeps/metrics.hpp"
#include "vcubeps/rng.hpp"
#include "vcubeps/simnet.hpp"
#include "vcubeps/trace.hpp"

// The two single-root-per-topic comparison systems: SRPT-S (one static tree
// of subscribers plus forwarders per topic) and SRPT-B (one static tree of
// brokers per topic, subscribers attached to brokers). Both deliver on
// reception; neither orders messages. Tree state is owned by the run's
// event loop, not distributed.

namespace vcubeps {

enum class SrptRole : std::uint8_t { Subscriber, Forwarder, Broker };

struct SrptEdge {
  NodeId child;
  NodeId parent;
};

class SrptTree {
 public:
  SrptTree() = default;
  /// Union of every member's bit-correction path to the root (flip the
  /// lowest differing bit first). Interior non-members become forwarders.
  SrptTree(TopicId topic, NodeId root, const std::vector<NodeId>& members,
           const HypercubeConfig& cfg);

  TopicId topic() const { return topic_; }
  NodeId root() const { return root_; }
  bool contains(NodeId n) const { return n == root_ || parent_of_.count(n); }
  SrptRole role(NodeId n) const { return role_.at(n); }
  const std::vector<NodeId>& children(NodeId n) const;
  std::size_t edge_count() const { return parent_of_.size(); }
  std::size_t node_count() const { return role_.size(); }
  std::size_t forwarder_count() const;
  int depth_of(NodeId n) const;

  /// Grafts a joining member; returns the edges added (graft path order).
  std::vector<SrptEdge> join(NodeId n, const HypercubeConfig& cfg);
  /// Member leaves: downgraded to forwarder while it still relays for a
  /// subtree, pruned otherwise (with cleanup of childless forwarder
  /// ancestors). Returns the edges removed.
  std::vector<SrptEdge> leave(NodeId n);

  /// Every forwarder lies on some member-to-root path.
  bool forwarders_sound() const;

 private:
  void prune_upwards(NodeId from, std::vector<SrptEdge>& removed);

  TopicId topic_ = 0;
  NodeId root_ = 0;
  std::map<NodeId, NodeId> parent_of_;
  std::map<NodeId, std::vector<NodeId>> children_of_;
  std::map<NodeId, SrptRole> role_;
};

/// SRPT-S: publisher sends straight to the topic root (the rendezvous node
/// is known to everyone), the root floods the static tree, subscribers
/// deliver on reception, forwarder receptions are false positives. Joins
/// and leaves are processed by the root, which emits one notification per
/// changed tree edge through its data-plane queue.
class SrptSSystem final : public MessageTarget {
 public:
  SrptSSystem(Engine& engine, HypercubeConfig cfg, TraceSink& trace,
              MetricsCollector* metrics = nullptr, std::uint32_t run_id = 0);

  void setup_topic(TopicId t, NodeId root, const std::vector<NodeId>& members);
  void publish(NodeId publisher, TopicId t, std::uint32_t payload_size = 0);
  void join(NodeId n, TopicId t);
  void leave(NodeId n, TopicId t);

  void on_message(NodeId to, ProtocolMessage m, NodeId from,
                  SimTime now) override;

  const SrptTree& tree(TopicId t) const { return trees_.at(t); }
  std::uint64_t restructure_messages() const { return restructure_msgs_; }

 private:
  void disseminate(TopicId t, const ProtocolMessage& m, NodeId at);
  void emit_recv(NodeId to, NodeId from, const ProtocolMessage& m,
                 bool forwarder);

  Engine& engine_;
  HypercubeConfig cfg_;
  TraceSink& trace_;
  MetricsCollector* metrics_;
  std::uint32_t run_id_;
  std::map<TopicId, SrptTree> trees_;
  std::vector<Counter> counters_;
  std::uint64_t restructure_msgs_ = 0;
};

/// SRPT-B: a broker tree (bit-correction over broker indices mapped onto a
/// log2(B)-cube), subscribers attached evenly to brokers. A publication
/// travels publisher -> attached broker -> root broker -> broker tree, and
/// each broker unicasts to its attached subscribers on reception.
class SrptBSystem final : public MessageTarget {
 public:
  SrptBSystem(Engine& engine, HypercubeConfig cfg, TraceSink& trace,
              MetricsCollector* metrics = nullptr, std::uint32_t run_id = 0);

  /// Brokers are given in broker-index order; everyone else subscribes and
  /// is attached round-robin after a seeded shuffle.
  void setup_topic(TopicId t, const std::vector<NodeId>& brokers,
                   RngStream& attach_rng);

  void publish(NodeId publisher, TopicId t, std::uint32_t payload_size = 0);
  void on_message(NodeId to, ProtocolMessage m, NodeId from,
                  SimTime now) override;

  NodeId broker_of(TopicId t, NodeId subscriber) const;
  NodeId root_broker(TopicId t) const { return topics_.at(t).root; }
  const std::vector<NodeId>& attached(TopicId t, NodeId broker) const;
  std::size_t max_attach_spread(TopicId t) const;

 private:
  struct BrokerTopic {
    NodeId root = 0;
    std::map<NodeId, std::uint32_t> broker_index;
    std::vector<NodeId> brokers;                       // by index
    std::map<NodeId, std::vector<NodeId>> tree_children;  // broker -> brokers
    std::map<NodeId, NodeId> attach;                   // subscriber -> broker
    std::map<NodeId, std::vector<NodeId>> attached;    // broker -> subscribers
    HypercubeConfig index_cube;
  };

  void broker_disseminate(TopicId t, const ProtocolMessage& m, NodeId broker,
                          SimTime now);
  void emit_recv(NodeId to, NodeId from, const ProtocolMessage& m,
                 bool forwarder);

  Engine& engine_;
  HypercubeConfig cfg_;
  TraceSink& trace_;
  MetricsCollector* metrics_;
  std::uint32_t run_id_;
  std::map<TopicId, BrokerTopic> topics_;
  std::vector<Counter> counters_;
  // tree-phase reception time per (source, topic, counter) and broker
  std::map<std::tuple<NodeId, TopicId, Counter>, std::map<NodeId, SimTime>>
      broker_recv_;
};

}  // namespace vcubeps
