#include "vcubeps/simnet.hpp"

namespace vcubeps {

Engine::Engine(std::uint32_t n_nodes, DelayModel dm, TraceSink& trace,
               std::uint32_t run_id, std::uint64_t event_limit)
    : n_(n_nodes),
      dm_(dm),
      trace_(trace),
      run_id_(run_id),
      limit_(event_limit),
      queues_(n_nodes),
      qstats_(n_nodes) {
  if (dm.t_pc < 0 || dm.t_t < 0 || dm.t_pp < 0)
    throw ArgumentError("delay components must be non-negative");
}

void Engine::send(NodeId from, NodeId to, ProtocolMessage m) {
  if (from == to) throw ArgumentError("send: from == to");
  if (from >= n_ || to >= n_) throw ArgumentError("send: node out of range");

  TraceRecord rec;
  rec.run_id = run_id_;
  rec.time = now_;
  rec.kind = TraceKind::Send;
  rec.node = from;
  rec.peer = to;
  rec.msg_kind = m.kind;
  rec.msg_source = m.id.source;
  rec.msg_topic = m.id.topic;
  rec.msg_counter = m.id.counter;
  rec.cb_size = m.kind == MsgKind::Pub
                    ? static_cast<std::int32_t>(m.causal_barrier.size())
                    : -1;

  const SimTime enqueue_at = now_ + dm_.t_pc;
  SimTime start, t_q;
  if (is_data_plane(m)) {
    OutputQueue& q = queues_[from];
    start = std::max(enqueue_at, q.busy_until);
    t_q = start - enqueue_at;
    q.busy_until = start + dm_.t_t;

    NodeQueueStats& st = qstats_[from];
    if (st.first_enqueue < 0) st.first_enqueue = enqueue_at;
    st.last_tx_end = std::max(st.last_tx_end, start + dm_.t_t);
    ++st.enqueued;
    st.sum_tq += static_cast<std::uint64_t>(t_q);
    while (!q.starts.empty() && q.starts.front() <= enqueue_at)
      q.starts.pop_front();
    q.starts.push_back(start);
    st.peak_backlog = std::max(st.peak_backlog,
                               static_cast<std::uint32_t>(q.starts.size()));
  } else {
    start = enqueue_at;
    t_q = 0;
  }
  const SimTime arrive = start + dm_.t_t + dm_.t_pp;
  rec.t_q = t_q;
  trace_.emit(rec);

  Event ev;
  ev.time = arrive;
  ev.seq = seq_++;
  ev.is_action = false;
  ev.to = to;
  ev.from = from;
  ev.msg = std::move(m);
  ev.t_q = t_q;
  events_.push(std::move(ev));
}

void Engine::schedule(SimTime at, std::function<void()> fn) {
  if (at < now_) throw ArgumentError("schedule: time in the past");
  Event ev;
  ev.time = at;
  ev.seq = seq_++;
  ev.is_action = true;
  ev.action = std::move(fn);
  events_.push(std::move(ev));
}

void Engine::run(MessageTarget& target) {
  while (!events_.empty()) {
    if (++processed_ > limit_)
      throw LivelockError("event limit exceeded: livelock suspected");
    // priority_queue::top is const; the pop-after-move is safe because we
    // never touch the moved-from top again.
    Event ev = std::move(const_cast<Event&>(events_.top()));
    events_.pop();
    now_ = ev.time;
    if (ev.is_action) {
      ev.action();
    } else {
      if (is_data_plane(ev.msg)) ++qstats_[ev.from].transmitted;
      target.on_message(ev.to, std::move(ev.msg), ev.from, now_);
    }
  }
}

bool Engine::queues_drained() const {
  for (const auto& st : qstats_)
    if (st.enqueued != st.transmitted) return false;
  return true;
}

}  // namespace vcubeps
