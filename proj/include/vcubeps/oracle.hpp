#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vcubeps/core.hpp"
#include "vcubeps/trace.hpp"

// Brute-force validators over a serialized run trace. They never reuse
// protocol code paths: causal precedence, expected receivers and membership
// ground truth are all recomputed from the trace alone.

namespace vcubeps::oracle {

struct Violation {
  std::string checker;
  std::string detail;
};

struct Report {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Happens-before over publications of one topic, built from the trace's
/// publish/deliver ordering at each node. `direct` holds, per message, every
/// message its publisher had delivered or published beforehand; reachability
/// is its transitive closure; the immediate-predecessor set is the
/// transitive reduction.
struct HappensBefore {
  std::vector<MsgId> msgs;                       // publish order
  std::map<std::pair<NodeId, Counter>, int> index;
  std::vector<std::vector<int>> direct;
  std::vector<std::vector<bool>> reach;          // reach[a][b]: a precedes b
  std::vector<std::vector<int>> immediate;

  bool precedes(int a, int b) const { return reach[a][b]; }
};

struct OracleOptions {
  /// SUB/UNS coverage needs membership send/recv records; turn off when the
  /// trace was captured through the publication-only filter.
  bool membership_coverage = true;
};

class TraceOracle {
 public:
  TraceOracle(TraceHeader header, std::vector<TraceRecord> records);

  std::vector<Violation> check_integrity() const;
  std::vector<Violation> check_causal_safety() const;
  std::vector<Violation> check_fifo_reception() const;
  std::vector<Violation> check_cb_exactness() const;
  std::vector<Violation> check_expected_receivers(
      const OracleOptions& opt = {}) const;
  std::vector<Violation> check_membership_convergence() const;
  Report check_all(const OracleOptions& opt = {}) const;

  const HappensBefore& happens_before(TopicId t) const;
  /// Guaranteed-receiver set for one broadcast (Sub_p operationalization).
  std::set<NodeId> expected_receivers(const MsgId& id) const;

  /// True when every completed membership op on t finished (root acks
  /// collected) before the next one was issued.
  bool membership_serialized(TopicId t) const;
  /// True when no non-warm membership op overlaps the publishing phase.
  bool membership_static_during_publishing(TopicId t) const;

 private:
  struct Broadcast {
    MsgId id;
    MsgKind kind = MsgKind::Pub;
    SimTime emit_time = 0;
    std::size_t emit_idx = 0;
    std::optional<SimTime> complete_time;
    std::size_t complete_idx = 0;
    std::vector<CbEntry> cb;  // PUB only
  };
  struct MembershipOp {
    NodeId node = 0;
    bool sub = true;
    bool warm = false;
    SimTime time = 0;
    std::size_t idx = 0;
    std::optional<Counter> counter;
    std::optional<SimTime> complete_time;
    std::size_t complete_idx = 0;
  };

  void build_indexes();

  TraceHeader header_;
  HypercubeConfig cfg_;
  std::vector<TraceRecord> recs_;

  std::set<TopicId> topics_;
  // broadcasts keyed by (source, topic, counter)
  std::map<std::tuple<NodeId, TopicId, Counter>, Broadcast> broadcasts_;
  // per topic, per node: ordered (record idx, msg key) delivery events;
  // publish records count as the source's own delivery
  std::map<TopicId, std::map<NodeId, std::vector<std::pair<std::size_t,
      std::pair<NodeId, Counter>>>>> deliveries_;
  // per topic, per node: ordered PUB receptions (idx, source, counter)
  std::map<TopicId, std::map<NodeId, std::vector<std::tuple<std::size_t,
      NodeId, Counter>>>> pub_receptions_;
  // per (topic, msg key): every node that received it (any kind)
  std::map<std::tuple<NodeId, TopicId, Counter>, std::set<NodeId>> receivers_;
  std::map<TopicId, std::vector<MembershipOp>> membership_;
  // quiescence views: topic -> node -> member -> rc
  std::map<TopicId, std::map<NodeId, std::map<NodeId, Counter>>> views_;
  mutable std::map<TopicId, HappensBefore> hb_;
};

}  // namespace vcubeps::oracle
