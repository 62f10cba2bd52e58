#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <vector>

#include "vcubeps/core.hpp"
#include "vcubeps/trace.hpp"

// Deterministic discrete-event engine with the packet-switched delay model:
// every transmitted copy costs t_pc (processing, charged per copy before it
// enters the queue) + t_q (wait for the sender's link) + t_t (transmission)
// + t_pp (propagation). Publication traffic (PUB and ACK-of-PUB) serializes
// on a per-node FIFO output queue; membership traffic (SUB/UNS and their
// ACKs) travels on a control channel with the same per-hop latency and
// t_q = 0. Events are processed in (time, seq) order; seq is assigned at
// scheduling time, so identical configs replay identically.

namespace vcubeps {

struct DelayModel {
  SimTime t_pc = 1;
  SimTime t_t = 1;
  SimTime t_pp = 100;
};

inline bool is_data_plane(const ProtocolMessage& m) {
  if (m.plane != PlaneOverride::Auto) return m.plane == PlaneOverride::Data;
  return m.kind == MsgKind::Pub ||
         (m.kind == MsgKind::Ack && m.acked_kind == MsgKind::Pub);
}

/// Per-node data-plane queue statistics. The backlog integral equals the sum
/// of the waits t_q of all enqueued copies, so the time-averaged queue size
/// over [first_enqueue, last_tx_end] is sum_tq / window.
struct NodeQueueStats {
  std::uint64_t enqueued = 0;
  std::uint64_t transmitted = 0;
  std::uint64_t sum_tq = 0;
  SimTime first_enqueue = -1;
  SimTime last_tx_end = -1;
  std::uint32_t peak_backlog = 0;

  double mean_queue() const {
    if (enqueued == 0 || last_tx_end <= first_enqueue) return 0.0;
    return static_cast<double>(sum_tq) /
           static_cast<double>(last_tx_end - first_enqueue);
  }
};

class MessageTarget {
 public:
  virtual ~MessageTarget() = default;
  virtual void on_message(NodeId to, ProtocolMessage m, NodeId from,
                          SimTime now) = 0;
};

class LivelockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Engine {
 public:
  Engine(std::uint32_t n_nodes, DelayModel dm, TraceSink& trace,
         std::uint32_t run_id = 0, std::uint64_t event_limit = kDefaultLimit);

  SimTime now() const { return now_; }
  const DelayModel& delay() const { return dm_; }
  std::uint32_t node_count() const { return n_; }

  /// Transmit m from -> to under the delay model. Must be called at the
  /// current simulation time (inside a handler or a scheduled action).
  void send(NodeId from, NodeId to, ProtocolMessage m);

  /// Run fn at the given time (>= now). Same-time actions fire in
  /// scheduling order.
  void schedule(SimTime at, std::function<void()> fn);

  /// Dispatch events until the queue drains. Message arrivals go to the
  /// attached target.
  void run(MessageTarget& target);

  const NodeQueueStats& queue_stats(NodeId n) const { return qstats_.at(n); }
  std::uint64_t events_processed() const { return processed_; }

  /// Queue conservation: every enqueued copy was transmitted.
  bool queues_drained() const;

  static constexpr std::uint64_t kDefaultLimit = 2'000'000'000ULL;

 private:
  struct Event {
    SimTime time;
    std::uint64_t seq;
    // exactly one of the two below is active
    bool is_action;
    NodeId to = 0;
    NodeId from = 0;
    ProtocolMessage msg;
    std::int64_t t_q = 0;
    std::function<void()> action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  struct OutputQueue {
    SimTime busy_until = 0;
    std::deque<SimTime> starts;  // transmission starts still in backlog
  };

  std::uint32_t n_;
  DelayModel dm_;
  TraceSink& trace_;
  std::uint32_t run_id_;
  std::uint64_t limit_;
  SimTime now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t processed_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::vector<OutputQueue> queues_;
  std::vector<NodeQueueStats> qstats_;
};

}  // namespace vcubeps
