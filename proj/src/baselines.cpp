#include "vcubeps/baselines.hpp"

#include <algorithm>
#include <bit>

#include "vcubeps/topology.hpp"

namespace vcubeps {

namespace {

NodeId next_hop_to(NodeId from, NodeId root) {
  const NodeId diff = from ^ root;
  return from ^ (diff & (~diff + 1));  // flip lowest differing bit
}

}  // namespace

SrptTree::SrptTree(TopicId topic, NodeId root,
                   const std::vector<NodeId>& members,
                   const HypercubeConfig& cfg)
    : topic_(topic), root_(root) {
  topology::check_node(root, cfg);
  role_[root_] = SrptRole::Forwarder;
  for (NodeId m : members) join(m, cfg);
}

const std::vector<NodeId>& SrptTree::children(NodeId n) const {
  static const std::vector<NodeId> kNone;
  auto it = children_of_.find(n);
  return it == children_of_.end() ? kNone : it->second;
}

std::size_t SrptTree::forwarder_count() const {
  std::size_t c = 0;
  for (const auto& [n, r] : role_)
    if (r == SrptRole::Forwarder) ++c;
  return c;
}

int SrptTree::depth_of(NodeId n) const {
  int d = 0;
  while (n != root_) {
    n = parent_of_.at(n);
    ++d;
  }
  return d;
}

std::vector<SrptEdge> SrptTree::join(NodeId n, const HypercubeConfig& cfg) {
  topology::check_node(n, cfg);
  std::vector<SrptEdge> added;
  NodeId at = n;
  while (!contains(at)) {
    const NodeId parent = next_hop_to(at, root_);
    parent_of_[at] = parent;
    role_[at] = SrptRole::Forwarder;
    added.push_back({at, parent});
    at = parent;
  }
  // children lists, deepest link first so the parent existed when added
  for (auto it = added.rbegin(); it != added.rend(); ++it)
    children_of_[it->parent].push_back(it->child);
  role_[n] = SrptRole::Subscriber;
  return added;
}

void SrptTree::prune_upwards(NodeId from, std::vector<SrptEdge>& removed) {
  NodeId at = from;
  while (at != root_ && role_.at(at) == SrptRole::Forwarder &&
         children(at).empty()) {
    const NodeId parent = parent_of_.at(at);
    auto& sibs = children_of_[parent];
    sibs.erase(std::find(sibs.begin(), sibs.end(), at));
    removed.push_back({at, parent});
    parent_of_.erase(at);
    role_.erase(at);
    children_of_.erase(at);
    at = parent;
  }
}

std::vector<SrptEdge> SrptTree::leave(NodeId n) {
  std::vector<SrptEdge> removed;
  if (!contains(n) || role_.at(n) != SrptRole::Subscriber) return removed;
  role_[n] = SrptRole::Forwarder;
  if (n != root_) prune_upwards(n, removed);
  return removed;
}

bool SrptTree::forwarders_sound() const {
  // mark every node on some subscriber-to-root path
  std::set<NodeId> on_path;
  for (const auto& [n, r] : role_) {
    if (r != SrptRole::Subscriber) continue;
    NodeId at = n;
    while (true) {
      on_path.insert(at);
      if (at == root_) break;
      at = parent_of_.at(at);
    }
  }
  for (const auto& [n, r] : role_)
    if (r == SrptRole::Forwarder && n != root_ && !on_path.count(n))
      return false;
  return true;
}

// ---------------------------------------------------------------- SRPT-S --

SrptSSystem::SrptSSystem(Engine& engine, HypercubeConfig cfg, TraceSink& trace,
                         MetricsCollector* metrics, std::uint32_t run_id)
    : engine_(engine),
      cfg_(cfg),
      trace_(trace),
      metrics_(metrics),
      run_id_(run_id),
      counters_(cfg.size, 0) {}

void SrptSSystem::setup_topic(TopicId t, NodeId root,
                              const std::vector<NodeId>& members) {
  trees_.emplace(t, SrptTree(t, root, members, cfg_));
  for (NodeId m : members) {
    TraceRecord r;
    r.run_id = run_id_;
    r.time = engine_.now();
    r.kind = TraceKind::Subscribe;
    r.node = m;
    r.msg_topic = t;
    r.extra = "WARM";
    trace_.emit(r);
  }
}

void SrptSSystem::emit_recv(NodeId to, NodeId from, const ProtocolMessage& m,
                            bool forwarder) {
  TraceRecord r;
  r.run_id = run_id_;
  r.time = engine_.now();
  r.kind = TraceKind::Recv;
  r.node = to;
  r.peer = from;
  r.msg_kind = m.kind;
  r.msg_source = m.id.source;
  r.msg_topic = m.id.topic;
  r.msg_counter = m.id.counter;
  r.is_forwarder_copy = forwarder && m.kind == MsgKind::Pub;
  trace_.emit(r);
}

void SrptSSystem::publish(NodeId publisher, TopicId t,
                          std::uint32_t payload_size) {
  SrptTree& tree = trees_.at(t);
  ProtocolMessage m;
  m.kind = MsgKind::Pub;
  m.id = {publisher, t, counters_[publisher]++};
  m.payload_size = payload_size;
  if (metrics_) metrics_->on_publish_call(m.id, engine_.now());

  TraceRecord r;
  r.run_id = run_id_;
  r.time = engine_.now();
  r.kind = TraceKind::Publish;
  r.node = publisher;
  r.msg_kind = MsgKind::Pub;
  r.msg_source = publisher;
  r.msg_topic = t;
  r.msg_counter = m.id.counter;
  trace_.emit(r);

  if (publisher == tree.root()) {
    disseminate(t, m, publisher);
  } else {
    // the additional hop: rendezvous root reached directly
    if (metrics_) metrics_->on_pub_copy();
    engine_.send(publisher, tree.root(), m);
  }
}

void SrptSSystem::disseminate(TopicId t, const ProtocolMessage& m, NodeId at) {
  const SrptTree& tree = trees_.at(t);
  for (NodeId c : tree.children(at)) {
    if (metrics_) metrics_->on_pub_copy();
    engine_.send(at, c, m);
  }
}

void SrptSSystem::join(NodeId n, TopicId t) {
  TraceRecord r;
  r.run_id = run_id_;
  r.time = engine_.now();
  r.kind = TraceKind::Subscribe;
  r.node = n;
  r.msg_topic = t;
  r.extra = "OK";
  trace_.emit(r);
  ProtocolMessage req;
  req.kind = MsgKind::Sub;
  req.id = {n, t, counters_[n]++};
  req.plane = PlaneOverride::Data;  // restructuring is charged to the root
  const SrptTree& tree = trees_.at(t);
  if (n == tree.root()) {
    trees_.at(t).join(n, cfg_);
    return;
  }
  ++restructure_msgs_;
  engine_.send(n, tree.root(), req);
}

void SrptSSystem::leave(NodeId n, TopicId t) {
  TraceRecord r;
  r.run_id = run_id_;
  r.time = engine_.now();
  r.kind = TraceKind::Unsubscribe;
  r.node = n;
  r.msg_topic = t;
  r.extra = "OK";
  trace_.emit(r);
  ProtocolMessage req;
  req.kind = MsgKind::Uns;
  req.id = {n, t, counters_[n]++};
  req.plane = PlaneOverride::Data;
  const SrptTree& tree = trees_.at(t);
  if (n == tree.root()) return;  // the rendezvous root never leaves
  ++restructure_msgs_;
  engine_.send(n, tree.root(), req);
}

void SrptSSystem::on_message(NodeId to, ProtocolMessage m, NodeId from,
                             SimTime now) {
  SrptTree& tree = trees_.at(m.id.topic);
  if (m.kind == MsgKind::Sub || m.kind == MsgKind::Uns) {
    emit_recv(to, from, m, false);
    if (to != tree.root()) return;  // edge-change notification, sink it
    std::vector<SrptEdge> changed = m.kind == MsgKind::Sub
                                        ? tree.join(m.id.source, cfg_)
                                        : tree.leave(m.id.source);
    for (const SrptEdge& e : changed) {
      // one notification per changed edge, through the root's data queue,
      // addressed to the surviving (parent) endpoint
      if (e.parent == tree.root()) continue;
      ProtocolMessage note;
      note.kind = m.kind;
      note.id = m.id;
      note.plane = PlaneOverride::Data;
      ++restructure_msgs_;
      engine_.send(to, e.parent, note);
    }
    return;
  }

  // PUB: subscribers deliver on reception, everyone in the tree forwards
  // down, nodes pruned while the copy was in flight just absorb it.
  const bool in_tree = tree.contains(to);
  const bool subscriber = in_tree && tree.role(to) == SrptRole::Subscriber;
  const bool delivers = subscriber && to != m.id.source;
  emit_recv(to, from, m, !subscriber);
  if (metrics_ && to != m.id.source)
    metrics_->on_reception(m.id, to, now, delivers);
  if (delivers) {
    TraceRecord r;
    r.run_id = run_id_;
    r.time = now;
    r.kind = TraceKind::Deliver;
    r.node = to;
    r.msg_kind = MsgKind::Pub;
    r.msg_source = m.id.source;
    r.msg_topic = m.id.topic;
    r.msg_counter = m.id.counter;
    trace_.emit(r);
    if (metrics_) metrics_->on_delivery(m.id, to, now);
  }
  if (in_tree) disseminate(m.id.topic, m, to);
}

// ---------------------------------------------------------------- SRPT-B --

SrptBSystem::SrptBSystem(Engine& engine, HypercubeConfig cfg, TraceSink& trace,
                         MetricsCollector* metrics, std::uint32_t run_id)
    : engine_(engine),
      cfg_(cfg),
      trace_(trace),
      metrics_(metrics),
      run_id_(run_id),
      counters_(cfg.size, 0) {}

void SrptBSystem::setup_topic(TopicId t, const std::vector<NodeId>& brokers,
                              RngStream& attach_rng) {
  if (brokers.size() < 2 || (brokers.size() & (brokers.size() - 1)) != 0)
    throw ArgumentError("broker count must be a power of two >= 2");
  BrokerTopic bt;
  bt.brokers = brokers;
  bt.index_cube = HypercubeConfig::from_size(
      static_cast<std::uint32_t>(brokers.size()));
  for (std::uint32_t i = 0; i < brokers.size(); ++i)
    bt.broker_index[brokers[i]] = i;
  const std::uint32_t root_idx =
      static_cast<std::uint32_t>(attach_rng.below(brokers.size()));
  bt.root = brokers[root_idx];
  // broker tree: bit-correction on broker indices toward the root index
  for (std::uint32_t i = 0; i < brokers.size(); ++i) {
    if (i == root_idx) continue;
    const std::uint32_t diff = i ^ root_idx;
    const std::uint32_t parent_idx = i ^ (diff & (~diff + 1));
    bt.tree_children[brokers[parent_idx]].push_back(brokers[i]);
  }
  // everyone else subscribes, attached round-robin after a seeded shuffle
  std::vector<NodeId> subs;
  std::set<NodeId> broker_set(brokers.begin(), brokers.end());
  for (NodeId n = 0; n < cfg_.size; ++n)
    if (!broker_set.count(n)) subs.push_back(n);
  attach_rng.shuffle(subs);
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const NodeId b = brokers[i % brokers.size()];
    bt.attach[subs[i]] = b;
    bt.attached[b].push_back(subs[i]);
  }
  for (NodeId s : subs) {
    TraceRecord r;
    r.run_id = run_id_;
    r.time = engine_.now();
    r.kind = TraceKind::Subscribe;
    r.node = s;
    r.msg_topic = t;
    r.extra = "WARM";
    trace_.emit(r);
  }
  topics_[t] = std::move(bt);
}

NodeId SrptBSystem::broker_of(TopicId t, NodeId subscriber) const {
  return topics_.at(t).attach.at(subscriber);
}

const std::vector<NodeId>& SrptBSystem::attached(TopicId t,
                                                 NodeId broker) const {
  static const std::vector<NodeId> kNone;
  const auto& bt = topics_.at(t);
  auto it = bt.attached.find(broker);
  return it == bt.attached.end() ? kNone : it->second;
}

std::size_t SrptBSystem::max_attach_spread(TopicId t) const {
  const auto& bt = topics_.at(t);
  std::size_t lo = SIZE_MAX, hi = 0;
  for (NodeId b : bt.brokers) {
    auto it = bt.attached.find(b);
    const std::size_t k = it == bt.attached.end() ? 0 : it->second.size();
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  return hi - lo;
}

void SrptBSystem::emit_recv(NodeId to, NodeId from, const ProtocolMessage& m,
                            bool forwarder) {
  TraceRecord r;
  r.run_id = run_id_;
  r.time = engine_.now();
  r.kind = TraceKind::Recv;
  r.node = to;
  r.peer = from;
  r.msg_kind = m.kind;
  r.msg_source = m.id.source;
  r.msg_topic = m.id.topic;
  r.msg_counter = m.id.counter;
  r.is_forwarder_copy = forwarder;
  trace_.emit(r);
}

void SrptBSystem::publish(NodeId publisher, TopicId t,
                          std::uint32_t payload_size) {
  const BrokerTopic& bt = topics_.at(t);
  ProtocolMessage m;
  m.kind = MsgKind::Pub;
  m.id = {publisher, t, counters_[publisher]++};
  m.payload_size = payload_size;
  if (metrics_) metrics_->on_publish_call(m.id, engine_.now());

  TraceRecord r;
  r.run_id = run_id_;
  r.time = engine_.now();
  r.kind = TraceKind::Publish;
  r.node = publisher;
  r.msg_kind = MsgKind::Pub;
  r.msg_source = publisher;
  r.msg_topic = t;
  r.msg_counter = m.id.counter;
  trace_.emit(r);

  if (metrics_) metrics_->on_pub_copy();
  engine_.send(publisher, bt.attach.at(publisher), m);
}

void SrptBSystem::broker_disseminate(TopicId t, const ProtocolMessage& m,
                                     NodeId broker, SimTime now) {
  const BrokerTopic& bt = topics_.at(t);
  broker_recv_[{m.id.source, m.id.topic, m.id.counter}][broker] = now;
  if (metrics_) {
    auto pt = metrics_->publish_time(m.id);
    if (pt) metrics_->on_tree_phase(now - *pt);
  }
  // tree first so dissemination keeps moving, then the attached fan-out
  auto tc = bt.tree_children.find(broker);
  if (tc != bt.tree_children.end()) {
    for (NodeId c : tc->second) {
      if (metrics_) metrics_->on_pub_copy();
      engine_.send(broker, c, m);
    }
  }
  auto at = bt.attached.find(broker);
  if (at != bt.attached.end()) {
    for (NodeId s : at->second) {
      if (s == m.id.source) continue;  // the publisher already has it
      if (metrics_) metrics_->on_pub_copy();
      engine_.send(broker, s, m);
    }
  }
}

void SrptBSystem::on_message(NodeId to, ProtocolMessage m, NodeId from,
                             SimTime now) {
  const TopicId t = m.id.topic;
  const BrokerTopic& bt = topics_.at(t);
  const bool to_is_broker = bt.broker_index.count(to) > 0;
  const bool from_is_broker = bt.broker_index.count(from) > 0;

  if (to_is_broker && !from_is_broker) {
    // publisher handed the message to its broker
    emit_recv(to, from, m, true);
    if (to == bt.root) {
      broker_disseminate(t, m, to, now);
    } else {
      if (metrics_) metrics_->on_pub_copy();
      engine_.send(to, bt.root, m);  // relay to the rendezvous broker
    }
    return;
  }
  if (to_is_broker) {
    // broker tree reception (root included via the relay hop)
    emit_recv(to, from, m, false);
    broker_disseminate(t, m, to, now);
    return;
  }
  // B-S reception at a subscriber
  emit_recv(to, from, m, false);
  if (metrics_) {
    metrics_->on_reception(m.id, to, now, true);
    metrics_->on_delivery(m.id, to, now);
    auto br = broker_recv_.find({m.id.source, m.id.topic, m.id.counter});
    if (br != broker_recv_.end()) {
      auto bt2 = br->second.find(from);
      if (bt2 != br->second.end()) metrics_->on_bs_phase(now - bt2->second);
    }
  }
  TraceRecord r;
  r.run_id = run_id_;
  r.time = now;
  r.kind = TraceKind::Deliver;
  r.node = to;
  r.msg_kind = MsgKind::Pub;
  r.msg_source = m.id.source;
  r.msg_topic = t;
  r.msg_counter = m.id.counter;
  trace_.emit(r);
}

}  // namespace vcubeps
