#include "vcubeps/vcube_system.hpp"

#include <algorithm>
#include <sstream>

namespace vcubeps {

VcubeSystem::VcubeSystem(Engine& engine, HypercubeConfig cfg, TraceSink& trace,
                         MetricsCollector* metrics, std::uint32_t run_id)
    : engine_(engine),
      cfg_(cfg),
      trace_(trace),
      metrics_(metrics),
      run_id_(run_id) {
  if (engine.node_count() != cfg.size)
    throw ArgumentError("engine/node-count mismatch");
  nodes_.reserve(cfg.size);
  for (NodeId n = 0; n < cfg.size; ++n)
    nodes_.push_back(std::make_unique<Node>(n, cfg));
}

TraceRecord VcubeSystem::base_record(TraceKind kind, NodeId node) const {
  TraceRecord r;
  r.run_id = run_id_;
  r.time = engine_.now();
  r.kind = kind;
  r.node = node;
  return r;
}

static std::string cb_to_extra(const std::vector<CbEntry>& cb) {
  if (cb.empty()) return "-";
  std::ostringstream os;
  for (std::size_t i = 0; i < cb.size(); ++i) {
    if (i) os << ';';
    os << cb[i].source << ':' << cb[i].counter;
  }
  return os.str();
}

void VcubeSystem::flush(NodeId self, Effects& fx) {
  for (const auto& done : fx.completed) {
    TraceRecord r = base_record(TraceKind::Complete, self);
    r.msg_kind = done.kind;
    r.msg_source = done.id.source;
    r.msg_topic = done.id.topic;
    r.msg_counter = done.id.counter;
    trace_.emit(r);
  }
  for (const auto& m : fx.published) {
    TraceRecord r = base_record(TraceKind::Publish, self);
    r.msg_kind = m.kind;
    r.msg_source = m.id.source;
    r.msg_topic = m.id.topic;
    r.msg_counter = m.id.counter;
    r.cb_size = static_cast<std::int32_t>(m.causal_barrier.size());
    r.extra = cb_to_extra(m.causal_barrier);
    trace_.emit(r);
    if (metrics_) metrics_->on_publish_cb(
        static_cast<std::uint32_t>(m.causal_barrier.size()));
    if (on_delivery_) on_delivery_(self, m, engine_.now());
  }
  for (const auto& m : fx.delivered) {
    TraceRecord r = base_record(TraceKind::Deliver, self);
    r.msg_kind = m.kind;
    r.msg_source = m.id.source;
    r.msg_topic = m.id.topic;
    r.msg_counter = m.id.counter;
    r.cb_size = static_cast<std::int32_t>(m.causal_barrier.size());
    trace_.emit(r);
    if (metrics_) metrics_->on_delivery(m.id, self, engine_.now());
    if (on_delivery_) on_delivery_(self, m, engine_.now());
  }
  for (auto& s : fx.sends) {
    if (metrics_ && s.msg.kind == MsgKind::Pub) metrics_->on_pub_copy();
    engine_.send(self, s.to, std::move(s.msg));
  }
  fx.clear();
}

OpResult VcubeSystem::do_subscribe(NodeId n, TopicId t) {
  const Counter c = nodes_[n]->counter();
  const OpResult res = nodes_[n]->subscribe(t, fx_);
  TraceRecord r = base_record(TraceKind::Subscribe, n);
  r.msg_topic = t;
  if (res == OpResult::Ok) r.msg_counter = static_cast<std::int64_t>(c);
  r.extra = res == OpResult::Ok ? "OK" : "NOK";
  trace_.emit(r);
  flush(n, fx_);
  return res;
}

OpResult VcubeSystem::do_unsubscribe(NodeId n, TopicId t) {
  const Counter c = nodes_[n]->counter();
  const OpResult res = nodes_[n]->unsubscribe(t, fx_);
  TraceRecord r = base_record(TraceKind::Unsubscribe, n);
  r.msg_topic = t;
  if (res == OpResult::Ok) r.msg_counter = static_cast<std::int64_t>(c);
  r.extra = res == OpResult::Ok ? "OK" : "NOK";
  trace_.emit(r);
  flush(n, fx_);
  return res;
}

OpResult VcubeSystem::do_publish(NodeId n, TopicId t,
                                 std::uint32_t payload_size) {
  const Counter c = nodes_[n]->counter();
  const OpResult res = nodes_[n]->publish(t, payload_size, fx_);
  if (res == OpResult::Ok && metrics_)
    metrics_->on_publish_call({n, t, c}, engine_.now());
  flush(n, fx_);
  return res;
}

void VcubeSystem::warm_subscribe(TopicId t, const std::vector<NodeId>& members,
                                 Counter rc) {
  for (NodeId n : members) {
    nodes_[n]->warm_subscribe(t, members, rc);
    TraceRecord r = base_record(TraceKind::Subscribe, n);
    r.msg_topic = t;
    r.msg_counter = static_cast<std::int64_t>(rc);
    r.extra = "WARM";
    trace_.emit(r);
  }
}

void VcubeSystem::on_message(NodeId to, ProtocolMessage m, NodeId from,
                             SimTime now) {
  TraceRecord r = base_record(TraceKind::Recv, to);
  r.peer = from;
  r.msg_kind = m.kind;
  r.msg_source = m.id.source;
  r.msg_topic = m.id.topic;
  r.msg_counter = m.id.counter;
  const bool subscriber = nodes_[to]->is_subscribed(m.id.topic);
  if (m.kind == MsgKind::Pub) {
    r.cb_size = static_cast<std::int32_t>(m.causal_barrier.size());
    r.is_forwarder_copy = !subscriber;
    if (metrics_) metrics_->on_reception(m.id, to, now, subscriber);
  }
  trace_.emit(r);
  nodes_[to]->on_receive(m, from, fx_);
  flush(to, fx_);
}

void VcubeSystem::emit_view_snapshots(const std::vector<TopicId>& topics) {
  for (NodeId n = 0; n < cfg_.size; ++n) {
    for (TopicId t : topics) {
      const TopicState* ts = nodes_[n]->topic_state(t);
      if (!ts) continue;
      for (const auto& [member, v] : ts->view) {
        if (v.first != ViewOp::Sub) continue;
        TraceRecord r = base_record(TraceKind::View, n);
        r.peer = member;
        r.msg_topic = t;
        r.extra = std::to_string(v.second);
        trace_.emit(r);
      }
    }
  }
}

bool VcubeSystem::all_quiescent() const {
  return std::all_of(nodes_.begin(), nodes_.end(),
                     [](const auto& n) { return n->quiescent(); });
}

std::vector<std::string> VcubeSystem::undelivered_backlog(
    const std::vector<TopicId>& topics) const {
  std::vector<std::string> out;
  for (NodeId n = 0; n < cfg_.size; ++n) {
    for (TopicId t : topics) {
      const TopicState* ts = nodes_[n]->topic_state(t);
      if (!ts || !nodes_[n]->is_subscribed(t)) continue;
      if (!ts->not_delvs.empty()) {
        std::ostringstream os;
        os << "node " << n << " topic " << t << " holds "
           << ts->not_delvs.size() << " undelivered messages";
        out.push_back(os.str());
      }
    }
  }
  return out;
}

}  // namespace vcubeps
