#include "vcubeps/trace.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace vcubeps {

const char* to_string(TraceKind k) {
  switch (k) {
    case TraceKind::Send: return "send";
    case TraceKind::Recv: return "recv";
    case TraceKind::Publish: return "publish";
    case TraceKind::Deliver: return "deliver";
    case TraceKind::Subscribe: return "subscribe";
    case TraceKind::Unsubscribe: return "unsubscribe";
    case TraceKind::Complete: return "complete";
    case TraceKind::View: return "view";
  }
  return "?";
}

static TraceKind kind_from(const std::string& s) {
  if (s == "send") return TraceKind::Send;
  if (s == "recv") return TraceKind::Recv;
  if (s == "publish") return TraceKind::Publish;
  if (s == "deliver") return TraceKind::Deliver;
  if (s == "subscribe") return TraceKind::Subscribe;
  if (s == "unsubscribe") return TraceKind::Unsubscribe;
  if (s == "complete") return TraceKind::Complete;
  if (s == "view") return TraceKind::View;
  throw ArgumentError("unknown trace kind: " + s);
}

static MsgKind msg_kind_from(const std::string& s) {
  if (s == "SUB") return MsgKind::Sub;
  if (s == "UNS") return MsgKind::Uns;
  if (s == "PUB") return MsgKind::Pub;
  if (s == "ACK") return MsgKind::Ack;
  throw ArgumentError("unknown msg kind: " + s);
}

std::string format_record(const TraceRecord& r) {
  std::ostringstream os;
  os << r.run_id << ' ' << r.time << ' ' << to_string(r.kind) << ' ' << r.node
     << ' ';
  if (r.peer < 0)
    os << '-';
  else
    os << r.peer;
  os << ' ' << (r.msg_kind ? to_string(*r.msg_kind) : "-") << ' ';
  auto opt = [&os](std::int64_t v) {
    if (v < 0)
      os << '-';
    else
      os << v;
  };
  opt(r.msg_source);
  os << ' ';
  opt(r.msg_topic);
  os << ' ';
  opt(r.msg_counter);
  os << ' ';
  opt(r.cb_size);
  os << ' ' << (r.is_forwarder_copy ? 1 : 0) << ' ';
  opt(r.t_q);
  os << ' ' << (r.extra.empty() ? "-" : r.extra);
  return os.str();
}

TraceRecord parse_record(const std::string& line) {
  std::istringstream is(line);
  std::string kind, mkind, peer, src, topic, ctr, cb, tq, fwd;
  TraceRecord r;
  if (!(is >> r.run_id >> r.time >> kind >> r.node >> peer >> mkind >> src >>
        topic >> ctr >> cb >> fwd >> tq >> r.extra))
    throw ArgumentError("malformed trace record: " + line);
  r.kind = kind_from(kind);
  auto num = [&line](const std::string& s) -> std::int64_t {
    if (s == "-") return -1;
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ArgumentError("malformed trace field in: " + line);
    return v;
  };
  r.peer = num(peer);
  if (mkind != "-") r.msg_kind = msg_kind_from(mkind);
  r.msg_source = num(src);
  r.msg_topic = num(topic);
  r.msg_counter = num(ctr);
  r.cb_size = static_cast<std::int32_t>(num(cb));
  r.is_forwarder_copy = num(fwd) != 0;
  r.t_q = num(tq);
  return r;
}

std::string format_header(const TraceHeader& h) {
  std::ostringstream os;
  os << "# vcubeps-trace v1 nodes=" << h.nodes << " seed=" << h.seed
     << " scenario=" << h.scenario;
  return os.str();
}

void PubOnlySink::emit(const TraceRecord& r) {
  if ((r.kind == TraceKind::Send || r.kind == TraceKind::Recv) &&
      r.msg_kind && *r.msg_kind != MsgKind::Pub)
    return;
  inner_.emit(r);
}

std::string serialize_trace(const TraceHeader& h,
                            const std::vector<TraceRecord>& records) {
  std::ostringstream os;
  os << format_header(h) << '\n';
  for (const auto& r : records) os << format_record(r) << '\n';
  return os.str();
}

void write_trace_file(const std::string& path, const TraceHeader& h,
                      const std::vector<TraceRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open trace file for writing: " + path);
  out << serialize_trace(h, records);
}

std::pair<TraceHeader, std::vector<TraceRecord>> parse_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# vcubeps-trace v1", 0) != 0)
    throw ArgumentError("missing or unsupported trace header");
  TraceHeader h;
  std::istringstream hs(line);
  std::string tok;
  while (hs >> tok) {
    if (tok.rfind("nodes=", 0) == 0) h.nodes = std::stoul(tok.substr(6));
    if (tok.rfind("seed=", 0) == 0) h.seed = std::stoull(tok.substr(5));
    if (tok.rfind("scenario=", 0) == 0) h.scenario = tok.substr(9);
  }
  std::vector<TraceRecord> recs;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    recs.push_back(parse_record(line));
  }
  return {h, std::move(recs)};
}

std::pair<TraceHeader, std::vector<TraceRecord>> read_trace_file(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open trace file: " + path);
  return parse_trace(in);
}

}  // namespace vcubeps
