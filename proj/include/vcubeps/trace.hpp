#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vcubeps/core.hpp"

// Event-trace schema (v1). One record per line, space-separated, "-" for
// fields that do not apply. Record order is the deterministic emission order
// of the engine, so identical configs serialize to identical bytes.
//
//   # vcubeps-trace v1 nodes=<N> seed=<seed> scenario=<name>
//   run_id time kind node peer msg_kind msg_source msg_topic msg_counter \
//       cb_size is_forwarder_copy t_q extra
//
// kind: send recv publish deliver subscribe unsubscribe complete view
//   send/recv     node = sender/receiver, peer = the other endpoint
//   publish       own PUB leaving the queue; extra carries the causal
//                 barrier as "s:c;s:c;..." (or "-")
//   deliver       PUB handed to the application at `node`
//   subscribe/unsubscribe  scenario action; extra = OK|NOK
//   complete      root collected all ACKs for msg_source/topic/counter
//   view          quiescence snapshot: `node` believes `peer` subscribed
//                 (one record per SUB entry, sorted), extra = reg counter

namespace vcubeps {

enum class TraceKind : std::uint8_t {
  Send,
  Recv,
  Publish,
  Deliver,
  Subscribe,
  Unsubscribe,
  Complete,
  View,
};

const char* to_string(TraceKind k);

struct TraceRecord {
  std::uint32_t run_id = 0;
  SimTime time = 0;
  TraceKind kind = TraceKind::Send;
  NodeId node = 0;
  std::int64_t peer = -1;
  std::optional<MsgKind> msg_kind;
  std::int64_t msg_source = -1;
  std::int64_t msg_topic = -1;
  std::int64_t msg_counter = -1;
  std::int32_t cb_size = -1;
  bool is_forwarder_copy = false;
  std::int64_t t_q = -1;
  std::string extra = "-";
};

std::string format_record(const TraceRecord& r);
TraceRecord parse_record(const std::string& line);

struct TraceHeader {
  std::uint32_t nodes = 0;
  std::uint64_t seed = 0;
  std::string scenario = "unknown";
};

std::string format_header(const TraceHeader& h);

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void emit(const TraceRecord& r) = 0;
};

class NullSink final : public TraceSink {
 public:
  void emit(const TraceRecord&) override {}
};

/// Keeps every record in memory (small runs, oracle validation, determinism
/// checks).
class MemorySink final : public TraceSink {
 public:
  void emit(const TraceRecord& r) override { records_.push_back(r); }
  const std::vector<TraceRecord>& records() const { return records_; }
  std::vector<TraceRecord>& records() { return records_; }

 private:
  std::vector<TraceRecord> records_;
};

/// Drops send/recv records of membership traffic; keeps everything the
/// oracle and metrics need for large runs (PUB traffic, actions, completes,
/// views, publishes, delivers).
class PubOnlySink final : public TraceSink {
 public:
  explicit PubOnlySink(TraceSink& inner) : inner_(inner) {}
  void emit(const TraceRecord& r) override;

 private:
  TraceSink& inner_;
};

std::string serialize_trace(const TraceHeader& h,
                            const std::vector<TraceRecord>& records);
void write_trace_file(const std::string& path, const TraceHeader& h,
                      const std::vector<TraceRecord>& records);
/// Returns header + records; throws ArgumentError on malformed input.
std::pair<TraceHeader, std::vector<TraceRecord>> read_trace_file(
    const std::string& path);
std::pair<TraceHeader, std::vector<TraceRecord>> parse_trace(std::istream& in);

}  // namespace vcubeps
