#include "vcubeps/node.hpp"

#include <algorithm>

namespace vcubeps {

void update_view(ViewMap& view, const std::vector<ViewEntry>& incoming) {
  for (const auto& e : incoming) {
    auto it = view.find(e.node);
    if (it == view.end() || e.reg_counter > it->second.second)
      view[e.node] = {e.op, e.reg_counter};
  }
}

std::vector<ViewEntry> view_to_entries(const ViewMap& view) {
  std::vector<ViewEntry> out;
  out.reserve(view.size());
  for (const auto& [n, v] : view) out.push_back({n, v.first, v.second});
  return out;
}

static void cb_insert(std::vector<CbEntry>& cb, CbEntry e) {
  auto it = std::lower_bound(cb.begin(), cb.end(), e);
  if (it == cb.end() || *it != e) cb.insert(it, e);
}

// Removes every element of `gone` (sorted) from `cb`.
static void cb_erase_all(std::vector<CbEntry>& cb,
                         const std::vector<CbEntry>& gone) {
  if (gone.empty() || cb.empty()) return;
  auto in_gone = [&gone](const CbEntry& e) {
    return std::binary_search(gone.begin(), gone.end(), e);
  };
  cb.erase(std::remove_if(cb.begin(), cb.end(), in_gone), cb.end());
}

TopicState& Node::topic(TopicId t) {
  auto it = topics_.find(t);
  if (it != topics_.end()) return it->second;
  if (topics_.size() >= kMaxTopics) throw ProtocolFault("topic limit exceeded");
  return topics_[t];
}

const TopicState* Node::topic_state(TopicId t) const {
  auto it = topics_.find(t);
  return it == topics_.end() ? nullptr : &it->second;
}

bool Node::is_subscribed(TopicId t) const {
  const TopicState* ts = topic_state(t);
  if (!ts) return false;
  auto it = ts->view.find(self_);
  return it != ts->view.end() && it->second.first == ViewOp::Sub;
}

std::vector<NodeId> Node::view_subscribers(TopicId t) const {
  std::vector<NodeId> out;
  if (const TopicState* ts = topic_state(t)) {
    for (const auto& [n, v] : ts->view)
      if (v.first == ViewOp::Sub) out.push_back(n);
  }
  return out;
}

bool Node::quiescent() const {
  if (!acks_.empty()) return false;
  for (const auto& [t, ts] : topics_)
    if (!ts.br_queue.empty() || ts.propagation_busy) return false;
  return true;
}

void Node::warm_subscribe(TopicId t, const std::vector<NodeId>& members,
                          Counter rc) {
  TopicState& ts = topic(t);
  bool self_member = false;
  for (NodeId n : members) {
    ts.view[n] = {ViewOp::Sub, rc};
    if (n == self_) self_member = true;
  }
  if (self_member) {
    ts.task_active = true;
    if (counter_ <= rc) counter_ = rc + 1;  // the implicit SUB consumed rc
  }
}

OpResult Node::subscribe(TopicId t, Effects& fx) {
  TopicState& ts = topic(t);
  if (is_subscribed(t)) return OpResult::Nok;
  // Alg. 1 line 6: the view is *replaced* — a rejoining node discards its
  // stale retained view and rebuilds it from the SUB ACK piggybacks.
  ts.view.clear();
  ts.view[self_] = {ViewOp::Sub, counter_};
  co_broadcast(MsgKind::Sub, t, 0, fx);
  return OpResult::Ok;
}

OpResult Node::unsubscribe(TopicId t, Effects& fx) {
  if (!is_subscribed(t)) return OpResult::Nok;
  TopicState& ts = topic(t);
  ts.view.erase(self_);
  co_broadcast(MsgKind::Uns, t, 0, fx);
  return OpResult::Ok;
}

OpResult Node::publish(TopicId t, std::uint32_t payload_size, Effects& fx) {
  if (!is_subscribed(t)) return OpResult::Nok;
  co_broadcast(MsgKind::Pub, t, payload_size, fx);
  return OpResult::Ok;
}

void Node::co_broadcast(MsgKind kind, TopicId t, std::uint32_t payload_size,
                        Effects& fx) {
  TopicState& ts = topic(t);
  ProtocolMessage m;
  m.kind = kind;
  m.id = {self_, t, counter_};
  m.payload_size = payload_size;
  ++counter_;
  if (kind == MsgKind::Sub) ts.task_active = true;  // created exactly once
  ts.br_queue.push_back(std::move(m));
  pump(t, fx);
}

std::vector<NodeId> Node::route_children(const ProtocolMessage& m,
                                         int h) const {
  if (m.kind == MsgKind::Sub) return topology::children_all(self_, h, cfg_);
  const TopicState* ts = topic_state(m.id.topic);
  return topology::children(
      self_,
      [ts](NodeId n) {
        if (!ts) return false;
        auto it = ts->view.find(n);
        return it != ts->view.end() && it->second.first == ViewOp::Sub;
      },
      h, cfg_);
}

void Node::pump(TopicId t, Effects& fx) {
  TopicState& ts = topic(t);
  while (ts.task_active && !ts.propagation_busy && !ts.br_queue.empty()) {
    ProtocolMessage m = std::move(ts.br_queue.front());
    ts.br_queue.pop_front();
    if (m.kind == MsgKind::Pub) {
      if (!ts.first_rec.count(self_)) ts.first_rec[self_] = m.id.counter;
      ts.last_delvs[self_] = m.id.counter;
      m.causal_barrier = ts.causal_barrier;
      ts.causal_barrier = {{self_, m.id.counter}};
      fx.published.push_back(m);  // CO_DELIVER to self, cb attached
    }
    std::vector<NodeId> chd = route_children(m, cfg_.dimension);
    if (!chd.empty()) {
      acks_[{m.id.source, m.id.topic, m.id.counter}] = AckLedgerEntry{
          std::nullopt, static_cast<std::uint32_t>(chd.size()), m.kind, {}};
      ts.propagation_busy = true;
      for (NodeId k : chd) fx.sends.push_back({k, m});
      return;  // resumes when the root ledger entry drains
    }
    fx.completed.push_back({m.id, m.kind});
    if (post_wait(t, m.kind)) return;
  }
}

bool Node::post_wait(TopicId t, MsgKind kind) {
  TopicState& ts = topic(t);
  if (kind != MsgKind::Uns) return false;
  // Alg. 2 lines 32-36: drop buffered messages and delivery bookkeeping for
  // t. The view is retained so the node can keep forwarding as a temporary
  // forwarder; the ack ledger is untouched (in-flight ACK duties complete).
  ts.not_delvs.clear();
  ts.first_rec.clear();
  ts.last_delvs.clear();
  if (ts.br_queue.empty()) {
    ts.task_active = false;
    return true;
  }
  return false;
}

bool Node::check_cb(const TopicState& ts, const std::vector<CbEntry>& cb) {
  for (const auto& e : cb) {
    auto ld = ts.last_delvs.find(e.source);
    if (ld != ts.last_delvs.end() && ld->second >= e.counter) continue;
    auto fr = ts.first_rec.find(e.source);
    if (fr != ts.first_rec.end() && fr->second > e.counter) continue;
    return false;
  }
  return true;
}

void Node::check_delivery(TopicId t, Effects& fx) {
  TopicState& ts = topic(t);
  bool delivered = true;
  while (delivered) {
    delivered = false;
    for (auto it = ts.not_delvs.begin(); it != ts.not_delvs.end(); ++it) {
      if (!check_cb(ts, it->second.cb)) continue;
      const NodeId s = it->first.first;
      const Counter c = it->first.second;
      ProtocolMessage msg = std::move(it->second.msg);
      std::vector<CbEntry> cb = std::move(it->second.cb);
      ts.not_delvs.erase(it);
      ts.last_delvs[s] = c;
      cb_erase_all(ts.causal_barrier, cb);
      cb_insert(ts.causal_barrier, {s, c});
      fx.delivered.push_back(std::move(msg));
      delivered = true;
      break;  // rescan from the start: (source, counter) order each pass
    }
  }
}

void Node::send_acks(NodeId parent, ProtocolMessage ack, Effects& fx) {
  const TopicId t = ack.id.topic;
  if (is_subscribed(t)) {
    const TopicState& ts = *topic_state(t);
    // A subscriber with no reception history for the acked source announces
    // its own subscription in the piggyback (membership gathering).
    if (!ts.first_rec.count(ack.id.source)) {
      auto own = ts.view.find(self_);
      ViewMap merged;
      update_view(merged, ack.membership);
      update_view(merged, {{self_, own->second.first, own->second.second}});
      ack.membership = view_to_entries(merged);
    }
  }
  fx.sends.push_back({parent, std::move(ack)});
}

void Node::on_receive(const ProtocolMessage& m, NodeId from, Effects& fx) {
  std::optional<std::pair<TopicId, MsgKind>> root_done;
  std::vector<ViewEntry> ack_aggregate;  // m.data after the ledger merge

  if (m.kind != MsgKind::Ack) {
    const int h = topology::cluster_index(self_, from, cfg_) - 1;
    std::vector<NodeId> chd = route_children(m, h);
    if (chd.empty()) {
      ProtocolMessage ack;
      ack.kind = MsgKind::Ack;
      ack.id = m.id;
      ack.acked_kind = m.kind;
      send_acks(from, std::move(ack), fx);
    } else {
      const auto key = std::make_tuple(m.id.source, m.id.topic, m.id.counter);
      if (acks_.count(key))
        throw ProtocolFault("duplicate broadcast reception (ledger collision)");
      acks_[key] = AckLedgerEntry{from, static_cast<std::uint32_t>(chd.size()),
                                  m.kind, {}};
      for (NodeId k : chd) fx.sends.push_back({k, m});
    }
  } else {
    const auto key = std::make_tuple(m.id.source, m.id.topic, m.id.counter);
    auto it = acks_.find(key);
    if (it == acks_.end())
      throw ProtocolFault("ACK without matching ledger entry");
    AckLedgerEntry& entry = it->second;
    update_view(entry.gathered, m.membership);
    if (entry.pending > 1) {
      --entry.pending;
      ack_aggregate = view_to_entries(entry.gathered);
    } else {
      std::optional<NodeId> parent = entry.parent;
      const MsgKind acked = entry.acked_kind;
      ViewMap gathered = std::move(entry.gathered);
      acks_.erase(it);
      ack_aggregate = view_to_entries(gathered);
      if (parent) {
        ProtocolMessage up;
        up.kind = MsgKind::Ack;
        up.id = m.id;
        up.acked_kind = acked;
        up.membership = ack_aggregate;
        send_acks(*parent, std::move(up), fx);
      } else {
        topic(m.id.topic).propagation_busy = false;
        fx.completed.push_back({m.id, acked});
        root_done = {m.id.topic, acked};
      }
    }
  }

  // Alg. 2 line 62: subscriber-side processing.
  if (is_subscribed(m.id.topic)) {
    TopicState& ts = topic(m.id.topic);
    if (m.kind == MsgKind::Pub) {
      const NodeId s = m.id.source;
      const Counter c = m.id.counter;
      auto ld = ts.last_delvs.find(s);
      auto fr = ts.first_rec.find(s);
      if (ts.not_delvs.count({s, c}) ||
          (ld != ts.last_delvs.end() && ld->second >= c) ||
          (fr != ts.first_rec.end() && fr->second > c))
        throw ProtocolFault("per-source FIFO reception violated");
      if (fr == ts.first_rec.end()) ts.first_rec[s] = c;
      ts.not_delvs[{s, c}] = PendingDelivery{m.causal_barrier, m};
      check_delivery(m.id.topic, fx);
    } else if (m.kind == MsgKind::Ack) {
      update_view(ts.view, ack_aggregate);
    } else {
      update_view(ts.view, {{m.id.source,
                             m.kind == MsgKind::Sub ? ViewOp::Sub : ViewOp::Uns,
                             m.id.counter}});
      if (m.kind == MsgKind::Uns) ts.first_rec.erase(m.id.source);
    }
  }

  if (root_done && !post_wait(root_done->first, root_done->second))
    pump(root_done->first, fx);
}

}  // namespace vcubeps
