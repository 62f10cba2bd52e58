#include "vcubeps/oracle.hpp"

#include <algorithm>
#include <sstream>

namespace vcubeps::oracle {

namespace {

std::vector<CbEntry> parse_cb_extra(const std::string& extra) {
  std::vector<CbEntry> out;
  if (extra.empty() || extra == "-") return out;
  std::istringstream is(extra);
  std::string tok;
  while (std::getline(is, tok, ';')) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) continue;
    out.push_back({static_cast<NodeId>(std::stoul(tok.substr(0, colon))),
                   static_cast<Counter>(std::stoull(tok.substr(colon + 1)))});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string msg_str(const MsgId& id) {
  std::ostringstream os;
  os << "(" << id.source << ",t" << id.topic << "," << id.counter << ")";
  return os.str();
}

}  // namespace

TraceOracle::TraceOracle(TraceHeader header, std::vector<TraceRecord> records)
    : header_(std::move(header)),
      cfg_(HypercubeConfig::from_size(header_.nodes)),
      recs_(std::move(records)) {
  build_indexes();
}

void TraceOracle::build_indexes() {
  for (std::size_t i = 0; i < recs_.size(); ++i) {
    const TraceRecord& r = recs_[i];
    if (r.msg_topic >= 0) topics_.insert(static_cast<TopicId>(r.msg_topic));
    switch (r.kind) {
      case TraceKind::Publish: {
        const MsgId id{r.node, static_cast<TopicId>(r.msg_topic),
                       static_cast<Counter>(r.msg_counter)};
        auto& b = broadcasts_[{id.source, id.topic, id.counter}];
        b.id = id;
        b.kind = MsgKind::Pub;
        b.emit_time = r.time;
        b.emit_idx = i;
        b.cb = parse_cb_extra(r.extra);
        deliveries_[id.topic][r.node].push_back(
            {i, {id.source, id.counter}});
        break;
      }
      case TraceKind::Send: {
        const auto key = std::make_tuple(static_cast<NodeId>(r.msg_source),
                                         static_cast<TopicId>(r.msg_topic),
                                         static_cast<Counter>(r.msg_counter));
        if (r.msg_kind && *r.msg_kind != MsgKind::Ack) {
          auto it = broadcasts_.find(key);
          if (it == broadcasts_.end()) {
            auto& b = broadcasts_[key];
            b.id = {std::get<0>(key), std::get<1>(key), std::get<2>(key)};
            b.kind = *r.msg_kind;
            b.emit_time = r.time;
            b.emit_idx = i;
          }
        }
        break;
      }
      case TraceKind::Recv: {
        if (r.msg_kind && *r.msg_kind != MsgKind::Ack) {
          const auto key = std::make_tuple(
              static_cast<NodeId>(r.msg_source),
              static_cast<TopicId>(r.msg_topic),
              static_cast<Counter>(r.msg_counter));
          receivers_[key].insert(r.node);
          if (*r.msg_kind == MsgKind::Pub)
            pub_receptions_[static_cast<TopicId>(r.msg_topic)][r.node]
                .push_back({i, static_cast<NodeId>(r.msg_source),
                            static_cast<Counter>(r.msg_counter)});
        }
        break;
      }
      case TraceKind::Deliver: {
        deliveries_[static_cast<TopicId>(r.msg_topic)][r.node].push_back(
            {i, {static_cast<NodeId>(r.msg_source),
                 static_cast<Counter>(r.msg_counter)}});
        break;
      }
      case TraceKind::Complete: {
        const auto key = std::make_tuple(static_cast<NodeId>(r.msg_source),
                                         static_cast<TopicId>(r.msg_topic),
                                         static_cast<Counter>(r.msg_counter));
        auto it = broadcasts_.find(key);
        if (it != broadcasts_.end() && !it->second.complete_time) {
          it->second.complete_time = r.time;
          it->second.complete_idx = i;
        } else if (it == broadcasts_.end()) {
          auto& b = broadcasts_[key];
          b.id = {std::get<0>(key), std::get<1>(key), std::get<2>(key)};
          b.kind = r.msg_kind.value_or(MsgKind::Pub);
          b.emit_time = r.time;
          b.emit_idx = i;
          b.complete_time = r.time;
          b.complete_idx = i;
        }
        break;
      }
      case TraceKind::Subscribe:
      case TraceKind::Unsubscribe: {
        const bool sub = r.kind == TraceKind::Subscribe;
        const bool warm = r.extra == "WARM";
        if (r.extra == "NOK") break;
        MembershipOp op;
        op.node = r.node;
        op.sub = sub;
        op.warm = warm;
        op.time = r.time;
        op.idx = i;
        if (r.msg_counter >= 0)
          op.counter = static_cast<Counter>(r.msg_counter);
        membership_[static_cast<TopicId>(r.msg_topic)].push_back(op);
        break;
      }
      case TraceKind::View: {
        views_[static_cast<TopicId>(r.msg_topic)][r.node]
              [static_cast<NodeId>(r.peer)] =
            static_cast<Counter>(std::stoull(r.extra));
        break;
      }
    }
  }
  // Link membership ops to their broadcast completions.
  for (auto& [t, ops] : membership_) {
    for (auto& op : ops) {
      if (op.warm) {
        op.complete_time = 0;
        op.complete_idx = op.idx;
        continue;
      }
      if (!op.counter) continue;
      auto it = broadcasts_.find({op.node, t, *op.counter});
      if (it != broadcasts_.end() && it->second.complete_time) {
        op.complete_time = it->second.complete_time;
        op.complete_idx = it->second.complete_idx;
      }
    }
  }
}

const HappensBefore& TraceOracle::happens_before(TopicId t) const {
  auto it = hb_.find(t);
  if (it != hb_.end()) return it->second;

  HappensBefore hb;
  std::vector<std::pair<std::size_t, const Broadcast*>> pubs;
  for (const auto& [key, b] : broadcasts_)
    if (b.kind == MsgKind::Pub && std::get<1>(key) == t)
      pubs.push_back({b.emit_idx, &b});
  std::sort(pubs.begin(), pubs.end());
  for (const auto& [idx, b] : pubs) {
    hb.index[{b->id.source, b->id.counter}] = static_cast<int>(hb.msgs.size());
    hb.msgs.push_back(b->id);
  }
  const int n = static_cast<int>(hb.msgs.size());
  hb.direct.assign(n, {});
  hb.reach.assign(n, std::vector<bool>(n, false));
  hb.immediate.assign(n, {});

  // direct predecessors: everything the publisher delivered/published on t
  // before the publish record
  auto dit = deliveries_.find(t);
  for (const auto& [idx, b] : pubs) {
    const int me = hb.index.at({b->id.source, b->id.counter});
    if (dit == deliveries_.end()) continue;
    auto nit = dit->second.find(b->id.source);
    if (nit == dit->second.end()) continue;
    for (const auto& [ridx, key] : nit->second) {
      if (ridx >= b->emit_idx) break;
      auto mi = hb.index.find(key);
      if (mi != hb.index.end() && mi->second != me)
        hb.direct[me].push_back(mi->second);
    }
  }
  // transitive closure, processing in publish order (edges point backwards)
  for (int v = 0; v < n; ++v) {
    for (int p : hb.direct[v]) {
      hb.reach[p][v] = true;
      for (int a = 0; a < n; ++a)
        if (hb.reach[a][p]) hb.reach[a][v] = true;
    }
  }
  // transitive reduction restricted to direct sets
  for (int v = 0; v < n; ++v) {
    for (int p : hb.direct[v]) {
      bool dominated = false;
      for (int q : hb.direct[v]) {
        if (q != p && hb.reach[p][q]) {
          dominated = true;
          break;
        }
      }
      if (!dominated) hb.immediate[v].push_back(p);
    }
  }
  return hb_.emplace(t, std::move(hb)).first->second;
}

std::vector<Violation> TraceOracle::check_integrity() const {
  std::vector<Violation> out;
  for (const auto& [t, per_node] : deliveries_) {
    for (const auto& [node, evs] : per_node) {
      std::set<std::pair<NodeId, Counter>> seen;
      for (const auto& [idx, key] : evs) {
        if (!seen.insert(key).second)
          out.push_back({"integrity",
                         "node " + std::to_string(node) + " delivered " +
                             msg_str({key.first, t, key.second}) + " twice"});
        auto b = broadcasts_.find({key.first, t, key.second});
        if (b == broadcasts_.end() || b->second.kind != MsgKind::Pub)
          out.push_back({"integrity",
                         "node " + std::to_string(node) +
                             " delivered never-published message " +
                             msg_str({key.first, t, key.second})});
      }
    }
  }
  return out;
}

std::vector<Violation> TraceOracle::check_causal_safety() const {
  std::vector<Violation> out;
  for (TopicId t : topics_) {
    const HappensBefore& hb = happens_before(t);
    if (hb.msgs.empty()) continue;
    auto dit = deliveries_.find(t);
    if (dit == deliveries_.end()) continue;
    for (const auto& [node, evs] : dit->second) {
      std::vector<int> order;
      order.reserve(evs.size());
      for (const auto& [idx, key] : evs) {
        auto mi = hb.index.find(key);
        if (mi != hb.index.end()) order.push_back(mi->second);
      }
      for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = a + 1; b < order.size(); ++b) {
          // delivered order[a] before order[b]; violation if the later one
          // causally precedes the earlier one
          if (hb.precedes(order[b], order[a]))
            out.push_back(
                {"causal_safety",
                 "node " + std::to_string(node) + " delivered " +
                     msg_str(hb.msgs[static_cast<std::size_t>(order[a])]) +
                     " before its causal predecessor " +
                     msg_str(hb.msgs[static_cast<std::size_t>(order[b])])});
        }
      }
    }
  }
  return out;
}

std::vector<Violation> TraceOracle::check_fifo_reception() const {
  std::vector<Violation> out;
  for (const auto& [t, per_node] : pub_receptions_) {
    for (const auto& [node, evs] : per_node) {
      std::map<NodeId, Counter> last;
      for (const auto& [idx, src, ctr] : evs) {
        auto it = last.find(src);
        if (it != last.end() && ctr <= it->second)
          out.push_back({"fifo_reception",
                         "node " + std::to_string(node) +
                             " received counters out of order from source " +
                             std::to_string(src) + " on topic " +
                             std::to_string(t)});
        last[src] = ctr;
      }
    }
  }
  // ACK gating: a source starts broadcast k+1 on t only after k completed.
  std::map<std::pair<NodeId, TopicId>, std::vector<const Broadcast*>> per_src;
  for (const auto& [key, b] : broadcasts_)
    per_src[{std::get<0>(key), std::get<1>(key)}].push_back(&b);
  for (auto& [st, list] : per_src) {
    std::sort(list.begin(), list.end(),
              [](const Broadcast* a, const Broadcast* b) {
                return a->id.counter < b->id.counter;
              });
    for (std::size_t i = 0; i + 1 < list.size(); ++i) {
      if (!list[i]->complete_time) continue;
      if (list[i]->complete_idx > list[i + 1]->emit_idx)
        out.push_back({"fifo_reception",
                       "source " + std::to_string(st.first) +
                           " started broadcast " + msg_str(list[i + 1]->id) +
                           " before " + msg_str(list[i]->id) + " completed"});
    }
  }
  return out;
}

std::vector<Violation> TraceOracle::check_cb_exactness() const {
  std::vector<Violation> out;
  for (TopicId t : topics_) {
    const HappensBefore& hb = happens_before(t);
    if (hb.msgs.empty()) continue;
    const bool strict = membership_static_during_publishing(t);
    for (std::size_t v = 0; v < hb.msgs.size(); ++v) {
      const MsgId& id = hb.msgs[v];
      const auto& b = broadcasts_.at({id.source, id.topic, id.counter});
      std::set<CbEntry> cb(b.cb.begin(), b.cb.end());
      // Every immediate predecessor must be in the carried barrier.
      for (int p : hb.immediate[v]) {
        const MsgId& pid = hb.msgs[static_cast<std::size_t>(p)];
        if (!cb.count({pid.source, pid.counter}))
          out.push_back({"cb_exactness",
                         "cb of " + msg_str(id) +
                             " misses immediate predecessor " + msg_str(pid)});
      }
      // No spurious entries: everything in the barrier is a real ancestor.
      for (const auto& e : cb) {
        auto mi = hb.index.find({e.source, e.counter});
        if (mi == hb.index.end() ||
            !hb.precedes(mi->second, static_cast<int>(v))) {
          out.push_back({"cb_exactness",
                         "cb of " + msg_str(id) + " carries non-ancestor (" +
                             std::to_string(e.source) + "," +
                             std::to_string(e.counter) + ")"});
          continue;
        }
        if (strict) {
          bool is_immediate = false;
          for (int p : hb.immediate[v])
            if (hb.msgs[static_cast<std::size_t>(p)].source == e.source &&
                hb.msgs[static_cast<std::size_t>(p)].counter == e.counter)
              is_immediate = true;
          if (!is_immediate)
            out.push_back({"cb_exactness",
                           "static run: cb of " + msg_str(id) +
                               " carries non-immediate predecessor (" +
                               std::to_string(e.source) + "," +
                               std::to_string(e.counter) + ")"});
        }
      }
    }
  }
  return out;
}

bool TraceOracle::membership_serialized(TopicId t) const {
  auto it = membership_.find(t);
  if (it == membership_.end()) return true;
  const MembershipOp* prev = nullptr;
  for (const auto& op : it->second) {
    if (op.warm) continue;
    if (prev && (!prev->complete_time || prev->complete_idx > op.idx))
      return false;
    prev = &op;
  }
  return true;
}

bool TraceOracle::membership_static_during_publishing(TopicId t) const {
  auto it = membership_.find(t);
  if (it == membership_.end()) return true;
  // first publish emit index on t
  std::size_t first_pub = recs_.size();
  for (const auto& [key, b] : broadcasts_)
    if (b.kind == MsgKind::Pub && std::get<1>(key) == t)
      first_pub = std::min(first_pub, b.emit_idx);
  for (const auto& op : it->second) {
    if (op.warm) continue;
    if (!op.complete_time) return false;
    if (op.complete_idx >= first_pub) return false;
  }
  return true;
}

std::set<NodeId> TraceOracle::expected_receivers(const MsgId& id) const {
  const auto bit = broadcasts_.find({id.source, id.topic, id.counter});
  if (bit == broadcasts_.end()) return {};
  const Broadcast& b = bit->second;
  std::set<NodeId> expected;
  if (b.kind == MsgKind::Sub) {
    for (NodeId n = 0; n < cfg_.size; ++n)
      if (n != id.source) expected.insert(n);
    return expected;
  }
  if (!b.complete_time) return {};
  const std::size_t t0 = b.emit_idx;
  const std::size_t t1 = b.complete_idx;

  auto mit = membership_.find(id.topic);
  static const std::vector<MembershipOp> kNone;
  const auto& ops = mit == membership_.end() ? kNone : mit->second;

  // Establishment: a node's last op issued before t1 is a SUB whose
  // completion (or warm install) happened before the broadcast started.
  // Ops are stored in record order, so the last matching one wins.
  auto establishment = [&](NodeId n) -> const MembershipOp* {
    const MembershipOp* last = nullptr;
    for (const auto& op : ops)
      if (op.node == n && op.idx < t1) last = &op;
    return last;
  };
  // Any UNS issued before t1 inside the half disqualifies guarantees there.
  auto uns_in_half = [&](NodeId member) {
    const NodeId half_base = (member >> (cfg_.dimension - 1))
                             << (cfg_.dimension - 1);
    const NodeId half_end = half_base + (cfg_.size >> 1);
    for (const auto& op : ops) {
      if (op.sub || op.idx >= t1) continue;
      if ((op.node >= half_base && op.node < half_end) ||
          op.node == id.source)
        return true;
    }
    return false;
  };

  for (NodeId n = 0; n < cfg_.size; ++n) {
    if (n == id.source) continue;
    const MembershipOp* est = establishment(n);
    if (!est || !est->sub) continue;
    if (!est->complete_time || est->complete_idx > t0) continue;
    if (uns_in_half(n)) continue;
    // every established subscriber in n's half must know n before t0:
    // knowledge arrives by max(complete(n), complete(j))
    const NodeId half_base = (n >> (cfg_.dimension - 1))
                             << (cfg_.dimension - 1);
    const NodeId half_end = half_base + (cfg_.size >> 1);
    bool ok = true;
    for (const auto& op : ops) {
      if (!op.sub || op.node == n) continue;
      const bool relevant = (op.node >= half_base && op.node < half_end) ||
                            op.node == id.source;
      if (!relevant || op.idx >= t1) continue;
      if (!op.complete_time || op.complete_idx > t0) {
        ok = false;  // a routing-relevant join still in flight
        break;
      }
    }
    if (ok) expected.insert(n);
  }
  return expected;
}

std::vector<Violation> TraceOracle::check_expected_receivers(
    const OracleOptions& opt) const {
  std::vector<Violation> out;
  for (const auto& [key, b] : broadcasts_) {
    if (b.kind == MsgKind::Ack) continue;
    if (!opt.membership_coverage && b.kind != MsgKind::Pub) continue;
    const std::set<NodeId> expected = expected_receivers(b.id);
    if (expected.empty()) continue;
    auto rit = receivers_.find(key);
    static const std::set<NodeId> kNone;
    const auto& got = rit == receivers_.end() ? kNone : rit->second;
    for (NodeId n : expected) {
      if (!got.count(n))
        out.push_back({"expected_receivers",
                       "node " + std::to_string(n) + " never received " +
                           std::string(to_string(b.kind)) + " " +
                           msg_str(b.id)});
    }
  }
  return out;
}

std::vector<Violation> TraceOracle::check_membership_convergence() const {
  std::vector<Violation> out;
  for (const auto& [t, ops] : membership_) {
    // ground truth: member -> counter of its final SUB; plus every counter
    // ever used in a real subscribe (for the fabrication check)
    std::map<NodeId, Counter> truth;
    std::map<NodeId, std::set<Counter>> sub_counters;
    for (const auto& op : ops) {
      if (op.sub) {
        truth[op.node] = op.counter.value_or(0);
        sub_counters[op.node].insert(op.counter.value_or(0));
      } else {
        truth.erase(op.node);
      }
    }
    if (truth.empty()) continue;
    auto vit = views_.find(t);
    if (vit == views_.end()) continue;  // no snapshots taken for this topic
    const bool serialized = membership_serialized(t);
    static const std::map<NodeId, Counter> kEmpty;
    for (const auto& [subscriber, final_ctr] : truth) {
      (void)final_ctr;
      const std::map<NodeId, Counter>* view = &kEmpty;
      {
        auto nv = vit->second.find(subscriber);
        if (nv != vit->second.end()) view = &nv->second;
      }
      // no fabricated entries, churny or not
      for (const auto& [n, rc] : *view) {
        auto sc = sub_counters.find(n);
        if (sc == sub_counters.end() || !sc->second.count(rc))
          out.push_back({"membership_convergence",
                         "subscriber " + std::to_string(subscriber) +
                             " holds fabricated entry for node " +
                             std::to_string(n) + " on topic " +
                             std::to_string(t)});
      }
      if (!serialized) continue;
      // serialized membership: view agrees with ground truth exactly
      for (const auto& [member, ctr] : truth) {
        auto e = view->find(member);
        if (e == view->end() || e->second != ctr)
          out.push_back({"membership_convergence",
                         "subscriber " + std::to_string(subscriber) +
                             " does not know member " + std::to_string(member) +
                             " of topic " + std::to_string(t)});
      }
      for (const auto& [n, rc] : *view) {
        (void)rc;
        if (!truth.count(n))
          out.push_back({"membership_convergence",
                         "subscriber " + std::to_string(subscriber) +
                             " holds stale member " + std::to_string(n) +
                             " for topic " + std::to_string(t)});
      }
    }
  }
  return out;
}

Report TraceOracle::check_all(const OracleOptions& opt) const {
  Report rep;
  auto add = [&rep](std::vector<Violation> v) {
    rep.violations.insert(rep.violations.end(),
                          std::make_move_iterator(v.begin()),
                          std::make_move_iterator(v.end()));
  };
  add(check_integrity());
  add(check_causal_safety());
  add(check_fifo_reception());
  add(check_cb_exactness());
  add(check_expected_receivers(opt));
  add(check_membership_convergence());
  return rep;
}

}  // namespace vcubeps::oracle
