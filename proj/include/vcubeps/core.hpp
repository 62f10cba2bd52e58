#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vcubeps {

using NodeId = std::uint32_t;
using TopicId = std::uint32_t;
using Counter = std::uint64_t;
using SimTime = std::int64_t;

inline constexpr int kMaxDimension = 16;        // N <= 65536
inline constexpr std::uint32_t kMaxTopics = 4096;

/// Thrown when a caller violates an argument precondition.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a protocol invariant is violated at runtime (e.g. an ACK with
/// no matching ledger entry). The simulator does not catch it: the run aborts.
class ProtocolFault : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct HypercubeConfig {
  int dimension = 0;
  std::uint32_t size = 0;

  static HypercubeConfig from_dimension(int d) {
    if (d < 1 || d > kMaxDimension)
      throw ArgumentError("hypercube dimension must be in [1, " +
                          std::to_string(kMaxDimension) + "]");
    return HypercubeConfig{d, std::uint32_t{1} << d};
  }
  static HypercubeConfig from_size(std::uint32_t n) {
    if (n < 2 || (n & (n - 1)) != 0)
      throw ArgumentError("node count must be a power of two >= 2");
    int d = 0;
    while ((std::uint32_t{1} << d) != n) ++d;
    return from_dimension(d);
  }
};

enum class MsgKind : std::uint8_t { Sub, Uns, Pub, Ack };

inline const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::Sub: return "SUB";
    case MsgKind::Uns: return "UNS";
    case MsgKind::Pub: return "PUB";
    case MsgKind::Ack: return "ACK";
  }
  return "?";
}

struct MsgId {
  NodeId source = 0;
  TopicId topic = 0;
  Counter counter = 0;

  friend auto operator<=>(const MsgId&, const MsgId&) = default;
};

enum class ViewOp : std::uint8_t { Sub, Uns };

/// One membership fact: node `node` last performed `op` at its counter value
/// `reg_counter`. Views and ACK piggybacks keep at most one entry per node,
/// the one with the largest reg_counter.
struct ViewEntry {
  NodeId node = 0;
  ViewOp op = ViewOp::Sub;
  Counter reg_counter = 0;

  friend auto operator<=>(const ViewEntry&, const ViewEntry&) = default;
};

/// Causal-barrier element: publication (source, counter) on the same topic.
struct CbEntry {
  NodeId source = 0;
  Counter counter = 0;

  friend auto operator<=>(const CbEntry&, const CbEntry&) = default;
};

enum class PlaneOverride : std::uint8_t { Auto, Data, Control };

/// Wire envelope for all four message kinds. Payload bytes are opaque and
/// never inspected by protocol logic; `causal_barrier` rides on PUB only;
/// `membership` rides on ACK only. `acked_kind` tells an ACK what kind of
/// message it acknowledges (needed to pick the network plane); `plane`
/// forces a plane regardless of kind (baseline restructure traffic).
struct ProtocolMessage {
  MsgKind kind = MsgKind::Pub;
  MsgId id;
  std::uint32_t payload_size = 0;
  std::vector<CbEntry> causal_barrier;
  std::vector<ViewEntry> membership;
  MsgKind acked_kind = MsgKind::Pub;
  PlaneOverride plane = PlaneOverride::Auto;
};

enum class OpResult : std::uint8_t { Ok, Nok };

struct OutboundSend {
  NodeId to = 0;
  ProtocolMessage msg;
};

struct BroadcastDone {
  MsgId id;
  MsgKind kind = MsgKind::Pub;
};

/// Everything a node handler produced: messages to transmit (in emission
/// order), messages delivered to the application, and root-level broadcast
/// completions (all children ACKs collected).
struct Effects {
  std::vector<OutboundSend> sends;
  std::vector<ProtocolMessage> published;   // own PUBs leaving the queue, cb attached
  std::vector<ProtocolMessage> delivered;   // received PUBs passed to the app
  std::vector<BroadcastDone> completed;

  void clear() {
    sends.clear();
    published.clear();
    delivered.clear();
    completed.clear();
  }
};

}  // namespace vcubeps
