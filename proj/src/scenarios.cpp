#include "vcubeps/scenarios.hpp"

#include <algorithm>
#include <memory>
#include <queue>
#include <set>
#include <sstream>

#include "vcubeps/baselines.hpp"
#include "vcubeps/rng.hpp"
#include "vcubeps/vcube_system.hpp"

namespace vcubeps {

namespace {

constexpr std::uint64_t kValidateRecordCap = 5'000'000;

struct Sinks {
  MemorySink mem;
  NullSink null;
  std::unique_ptr<PubOnlySink> filter;
  TraceSink* active = nullptr;

  explicit Sinks(TraceMode mode) {
    switch (mode) {
      case TraceMode::Full:
        active = &mem;
        break;
      case TraceMode::PubOnly:
        filter = std::make_unique<PubOnlySink>(mem);
        active = filter.get();
        break;
      case TraceMode::None:
        active = &null;
        break;
    }
  }
};

std::vector<NodeId> pct_sample(RngStream& rng, std::uint32_t n, double pct) {
  auto k = static_cast<std::uint32_t>(
      std::llround(pct / 100.0 * static_cast<double>(n)));
  k = std::max<std::uint32_t>(1, std::min(k, n));
  auto ids = rng.sample_ids(n, k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

struct ScenarioParts {
  RunConfig cfg;
  HypercubeConfig hc;
  Sinks sinks;
  Engine engine;
  MetricsCollector metrics;

  explicit ScenarioParts(const RunConfig& c)
      : cfg(c),
        hc(HypercubeConfig::from_size(c.nodes)),
        sinks(c.trace_mode),
        engine(c.nodes, c.delay_model(), *sinks.active, c.run_id,
               c.event_limit) {}

  // strict_liveness: with membership changes after the warm start a pending
  // delivery can legitimately block forever (the skipped source never
  // publishes again), so the empty-backlog form of Theorem 2 is asserted on
  // static-membership scenarios only.
  RunOutput finish(std::string system_name, VcubeSystem* vsys,
                   const std::vector<TopicId>& topics,
                   bool strict_liveness = true) {
    RunOutput out;
    if (vsys) {
      out.quiescent = vsys->all_quiescent();
      if (strict_liveness)
        out.liveness_issues = vsys->undelivered_backlog(topics);
      if (cfg.trace_mode == TraceMode::Full) vsys->emit_view_snapshots(topics);
    }
    out.metrics = metrics.finalize(engine, cfg.scenario,
                                   std::move(system_name), cfg.nodes, cfg.seed);
    out.header = TraceHeader{cfg.nodes, cfg.seed, cfg.scenario};
    out.trace = std::move(sinks.mem.records());
    if (cfg.validate && cfg.trace_mode != TraceMode::None &&
        out.trace.size() <= kValidateRecordCap) {
      oracle::TraceOracle orc(out.header, out.trace);
      oracle::OracleOptions opt;
      opt.membership_coverage = cfg.trace_mode == TraceMode::Full;
      out.oracle_report = orc.check_all(opt);
      out.oracle_ran = true;
    }
    return out;
  }
};

RunOutput run_single_publisher(const RunConfig& cfg) {
  ScenarioParts p(cfg);
  RngStream subs_rng(cfg.seed, "subscribers");
  RngStream pick_rng(cfg.seed, "publisher");
  auto subs = pct_sample(subs_rng, cfg.nodes, cfg.subscriber_pct);
  const NodeId publisher = subs[pick_rng.below(subs.size())];

  if (cfg.system == "vcube") {
    VcubeSystem sys(p.engine, p.hc, *p.sinks.active, &p.metrics, cfg.run_id);
    sys.warm_subscribe(0, subs);
    p.engine.schedule(0, [&] { sys.do_publish(publisher, 0); });
    p.engine.run(sys);
    return p.finish("vcube", &sys, {0});
  }
  if (cfg.system == "srpt-s") {
    RngStream root_rng(cfg.seed, "srpt-root");
    SrptSSystem sys(p.engine, p.hc, *p.sinks.active, &p.metrics, cfg.run_id);
    sys.setup_topic(0, static_cast<NodeId>(root_rng.below(cfg.nodes)), subs);
    p.engine.schedule(0, [&] { sys.publish(publisher, 0); });
    p.engine.run(sys);
    return p.finish("srpt-s", nullptr, {0});
  }
  throw ArgumentError("single_publisher: unsupported system " + cfg.system);
}

RunOutput run_several_publishers(const RunConfig& cfg) {
  ScenarioParts p(cfg);
  std::vector<NodeId> everyone(cfg.nodes);
  for (NodeId n = 0; n < cfg.nodes; ++n) everyone[n] = n;
  RngStream pub_rng(cfg.seed, "publishers");
  auto pubs = pct_sample(pub_rng, cfg.nodes, cfg.publisher_pct);
  RngStream time_rng(cfg.seed, "publish-times");
  std::vector<SimTime> when(pubs.size());
  for (auto& w : when) w = time_rng.uniform_int(0, 1000);

  if (cfg.system == "vcube") {
    VcubeSystem sys(p.engine, p.hc, *p.sinks.active, &p.metrics, cfg.run_id);
    sys.warm_subscribe(0, everyone);
    for (std::size_t i = 0; i < pubs.size(); ++i) {
      const NodeId n = pubs[i];
      p.engine.schedule(when[i], [&sys, n] { sys.do_publish(n, 0); });
    }
    p.engine.run(sys);
    return p.finish("vcube", &sys, {0});
  }
  if (cfg.system == "srpt-s") {
    RngStream root_rng(cfg.seed, "srpt-root");
    SrptSSystem sys(p.engine, p.hc, *p.sinks.active, &p.metrics, cfg.run_id);
    sys.setup_topic(0, static_cast<NodeId>(root_rng.below(cfg.nodes)),
                    everyone);
    for (std::size_t i = 0; i < pubs.size(); ++i) {
      const NodeId n = pubs[i];
      p.engine.schedule(when[i], [&sys, n] { sys.publish(n, 0); });
    }
    p.engine.run(sys);
    return p.finish("srpt-s", nullptr, {0});
  }
  throw ArgumentError("several_publishers: unsupported system " + cfg.system);
}

RunOutput run_message_order(const RunConfig& cfg) {
  ScenarioParts p(cfg);
  std::vector<NodeId> everyone(cfg.nodes);
  for (NodeId n = 0; n < cfg.nodes; ++n) everyone[n] = n;
  RngStream seed_rng(cfg.seed, "seed-publishers");
  auto seed_ids = seed_rng.sample_ids(cfg.nodes, cfg.wait_p);
  std::set<NodeId> seed_nodes(seed_ids.begin(), seed_ids.end());
  RngStream tw_rng(cfg.seed, "tw");
  std::vector<SimTime> tw(cfg.nodes);
  for (auto& w : tw) w = tw_rng.uniform_int(0, 1000);

  VcubeSystem sys(p.engine, p.hc, *p.sinks.active, &p.metrics, cfg.run_id);
  sys.warm_subscribe(0, everyone);

  auto seen = std::make_shared<std::vector<std::uint32_t>>(cfg.nodes, 0);
  auto seed_msgs = std::make_shared<std::set<std::pair<NodeId, Counter>>>();
  auto scheduled = std::make_shared<std::vector<bool>>(cfg.nodes, false);
  sys.set_delivery_listener([&, seen, seed_msgs, scheduled](
                                NodeId node, const ProtocolMessage& m,
                                SimTime now) {
    if (!seed_msgs->count({m.id.source, m.id.counter})) return;
    if (seed_nodes.count(node)) return;
    if (++(*seen)[node] == cfg.wait_p && !(*scheduled)[node]) {
      (*scheduled)[node] = true;
      p.engine.schedule(now + tw[node], [&sys, node] {
        sys.do_publish(node, 0);
      });
    }
  });
  for (NodeId s : seed_ids) {
    p.engine.schedule(0, [&sys, seed_msgs, s] {
      seed_msgs->insert({s, sys.node(s).counter()});
      sys.do_publish(s, 0);
    });
  }
  p.engine.run(sys);
  return p.finish("vcube", &sys, {0});
}

RunOutput run_multi_topic(const RunConfig& cfg) {
  ScenarioParts p(cfg);
  std::vector<NodeId> everyone(cfg.nodes);
  for (NodeId n = 0; n < cfg.nodes; ++n) everyone[n] = n;
  std::vector<TopicId> all_topics(cfg.topics);
  for (TopicId t = 0; t < cfg.topics; ++t) all_topics[t] = t;

  // one publish process per node, merged; topic drawn per message
  RngStream time_rng(cfg.seed, "publish-times");
  RngStream topic_rng(cfg.seed, "topic-dist");
  ZipfSampler zipf(cfg.topics, cfg.zipf_coeff);
  using Item = std::pair<SimTime, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> next;
  for (NodeId n = 0; n < cfg.nodes; ++n)
    next.push({time_rng.exponential_ut(
                   static_cast<double>(cfg.publish_interval)),
               n});
  struct Pub {
    SimTime at;
    NodeId node;
    TopicId topic;
  };
  std::vector<Pub> schedule;
  schedule.reserve(cfg.messages);
  for (std::uint64_t i = 0; i < cfg.messages; ++i) {
    auto [at, n] = next.top();
    next.pop();
    const TopicId t =
        cfg.dist == "zipf"
            ? static_cast<TopicId>(zipf.draw(topic_rng))
            : static_cast<TopicId>(topic_rng.below(cfg.topics));
    schedule.push_back({at, n, t});
    next.push({at + time_rng.exponential_ut(
                        static_cast<double>(cfg.publish_interval)),
               n});
  }

  if (cfg.system == "vcube") {
    VcubeSystem sys(p.engine, p.hc, *p.sinks.active, &p.metrics, cfg.run_id);
    for (TopicId t = 0; t < cfg.topics; ++t)
      sys.warm_subscribe(t, everyone, t);
    for (const Pub& pb : schedule)
      p.engine.schedule(pb.at,
                        [&sys, pb] { sys.do_publish(pb.node, pb.topic); });
    p.engine.run(sys);
    return p.finish("vcube", &sys, all_topics);
  }
  if (cfg.system == "srpt-s") {
    RngStream root_rng(cfg.seed, "srpt-root");
    SrptSSystem sys(p.engine, p.hc, *p.sinks.active, &p.metrics, cfg.run_id);
    for (TopicId t = 0; t < cfg.topics; ++t)
      sys.setup_topic(t, static_cast<NodeId>(root_rng.below(cfg.nodes)),
                      everyone);
    for (const Pub& pb : schedule)
      p.engine.schedule(pb.at, [&sys, pb] { sys.publish(pb.node, pb.topic); });
    p.engine.run(sys);
    return p.finish("srpt-s", nullptr, all_topics);
  }
  throw ArgumentError("multi_topic: unsupported system " + cfg.system);
}

struct ChurnState {
  std::set<NodeId> members;
  std::uint64_t published = 0;
};

RunOutput run_churn(const RunConfig& cfg) {
  ScenarioParts p(cfg);
  RngStream init_rng(cfg.seed, "subscribers");
  RngStream churn_rng(cfg.seed, "churn");
  RngStream pub_rng(cfg.seed, "publish-times");

  auto initial = pct_sample(init_rng, cfg.nodes, 75.0);
  auto st = std::make_shared<ChurnState>();
  st->members.insert(initial.begin(), initial.end());
  const auto churn_k = static_cast<std::uint32_t>(std::llround(
      cfg.churn_pct / 100.0 * static_cast<double>(cfg.nodes)));

  VcubeSystem* vsys = nullptr;
  SrptSSystem* ssys = nullptr;
  std::unique_ptr<VcubeSystem> vholder;
  std::unique_ptr<SrptSSystem> sholder;
  NodeId srpt_root = 0;
  if (cfg.system == "vcube") {
    vholder = std::make_unique<VcubeSystem>(p.engine, p.hc, *p.sinks.active,
                                            &p.metrics, cfg.run_id);
    vsys = vholder.get();
    vsys->warm_subscribe(0, initial);
  } else if (cfg.system == "srpt-s") {
    RngStream root_rng(cfg.seed, "srpt-root");
    srpt_root = static_cast<NodeId>(root_rng.below(cfg.nodes));
    sholder = std::make_unique<SrptSSystem>(p.engine, p.hc, *p.sinks.active,
                                            &p.metrics, cfg.run_id);
    ssys = sholder.get();
    ssys->setup_topic(0, srpt_root, initial);
  } else {
    throw ArgumentError("churn: unsupported system " + cfg.system);
  }

  auto pick_from = [&churn_rng](const std::vector<NodeId>& pool,
                                std::uint32_t k) {
    std::vector<NodeId> v = pool;
    std::vector<NodeId> out;
    for (std::uint32_t i = 0; i < k && i < v.size(); ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(churn_rng.below(v.size() - i));
      std::swap(v[i], v[j]);
      out.push_back(v[i]);
    }
    return out;
  };

  std::function<void()> wave = [&, st]() {
    if (st->published >= cfg.messages) return;  // done publishing, stop churn
    std::vector<NodeId> subs, nonsubs;
    for (NodeId n = 0; n < cfg.nodes; ++n) {
      if (st->members.count(n)) {
        if (!(ssys && n == srpt_root)) subs.push_back(n);
      } else {
        nonsubs.push_back(n);
      }
    }
    auto leavers = pick_from(subs, churn_k);
    auto joiners = pick_from(nonsubs, churn_k);
    for (NodeId n : leavers) {
      st->members.erase(n);
      if (vsys) vsys->do_unsubscribe(n, 0);
      if (ssys) ssys->leave(n, 0);
    }
    for (NodeId n : joiners) {
      st->members.insert(n);
      if (vsys) vsys->do_subscribe(n, 0);
      if (ssys) ssys->join(n, 0);
    }
    p.engine.schedule(p.engine.now() + cfg.churn_period, wave);
  };
  p.engine.schedule(cfg.churn_period, wave);

  std::function<void()> publish_next = [&, st]() {
    if (st->published >= cfg.messages) return;
    std::vector<NodeId> subs(st->members.begin(), st->members.end());
    if (!subs.empty()) {
      const NodeId n = subs[churn_rng.below(subs.size())];
      if (vsys) vsys->do_publish(n, 0);
      if (ssys) ssys->publish(n, 0);
      ++st->published;
    }
    if (st->published < cfg.messages)
      p.engine.schedule(p.engine.now() +
                            pub_rng.exponential_ut(static_cast<double>(
                                cfg.publish_interval)),
                        publish_next);
  };
  p.engine.schedule(
      pub_rng.exponential_ut(static_cast<double>(cfg.publish_interval)),
      publish_next);

  p.engine.run(vsys ? static_cast<MessageTarget&>(*vsys)
                    : static_cast<MessageTarget&>(*ssys));
  return p.finish(cfg.system, vsys, {0}, false);
}

RunOutput run_broker_compare(const RunConfig& cfg) {
  ScenarioParts p(cfg);
  RngStream pub_rng(cfg.seed, "publish-times");
  std::vector<NodeId> everyone(cfg.nodes);
  for (NodeId n = 0; n < cfg.nodes; ++n) everyone[n] = n;

  // the shared publish process: one new message per interval on average
  std::vector<std::pair<SimTime, std::size_t>> schedule;
  SimTime t = 0;
  for (std::uint64_t i = 0; i < cfg.messages; ++i) {
    t += pub_rng.exponential_ut(static_cast<double>(cfg.publish_interval));
    schedule.push_back({t, 0});
  }

  if (cfg.system == "vcube") {
    VcubeSystem sys(p.engine, p.hc, *p.sinks.active, &p.metrics, cfg.run_id);
    sys.warm_subscribe(0, everyone);
    for (auto& [at, _] : schedule) {
      const NodeId n = static_cast<NodeId>(pub_rng.below(cfg.nodes));
      p.engine.schedule(at, [&sys, n] { sys.do_publish(n, 0); });
    }
    p.engine.run(sys);
    return p.finish("vcube", &sys, {0});
  }
  if (cfg.system == "srpt-s") {
    RngStream root_rng(cfg.seed, "srpt-root");
    SrptSSystem sys(p.engine, p.hc, *p.sinks.active, &p.metrics, cfg.run_id);
    sys.setup_topic(0, static_cast<NodeId>(root_rng.below(cfg.nodes)),
                    everyone);
    for (auto& [at, _] : schedule) {
      const NodeId n = static_cast<NodeId>(pub_rng.below(cfg.nodes));
      p.engine.schedule(at, [&sys, n] { sys.publish(n, 0); });
    }
    p.engine.run(sys);
    return p.finish("srpt-s", nullptr, {0});
  }
  if (cfg.system == "srpt-b") {
    RngStream broker_rng(cfg.seed, "brokers");
    auto broker_ids = broker_rng.sample_ids(cfg.nodes, cfg.brokers);
    SrptBSystem sys(p.engine, p.hc, *p.sinks.active, &p.metrics, cfg.run_id);
    sys.setup_topic(0, broker_ids, broker_rng);
    std::set<NodeId> broker_set(broker_ids.begin(), broker_ids.end());
    std::vector<NodeId> subscribers;
    for (NodeId n = 0; n < cfg.nodes; ++n)
      if (!broker_set.count(n)) subscribers.push_back(n);
    for (auto& [at, _] : schedule) {
      const NodeId n = subscribers[pub_rng.below(subscribers.size())];
      p.engine.schedule(at, [&sys, n] { sys.publish(n, 0); });
    }
    p.engine.run(sys);
    return p.finish("srpt-b", nullptr, {0});
  }
  throw ArgumentError("broker_compare: unsupported system " + cfg.system);
}

struct ScriptedOp {
  SimTime at;
  int kind;  // 0 sub, 1 uns, 2 pub
  NodeId node;
  TopicId topic;
};

RunOutput run_random_schedule(const RunConfig& cfg) {
  ScenarioParts p(cfg);
  RngStream rng(cfg.seed, "schedule");
  const std::uint32_t n_topics = std::max<std::uint32_t>(1, cfg.topics);

  // script generation tracks intended membership so every op is valid
  std::vector<std::set<NodeId>> members(n_topics);
  std::vector<ScriptedOp> script;
  SimTime t = 0;
  for (std::uint32_t i = 0; i < cfg.schedule_ops; ++i) {
    t += cfg.serialized_membership ? rng.uniform_int(4000, 7000)
                                   : rng.uniform_int(5, 400);
    const TopicId topic = static_cast<TopicId>(rng.below(n_topics));
    auto& mem = members[topic];
    const std::uint64_t roll = rng.below(10);
    if (roll < 3 || mem.empty()) {
      // subscribe someone new (fall back when everyone is in)
      std::vector<NodeId> out;
      for (NodeId n = 0; n < cfg.nodes; ++n)
        if (!mem.count(n)) out.push_back(n);
      if (out.empty()) continue;
      const NodeId n = out[rng.below(out.size())];
      mem.insert(n);
      script.push_back({t, 0, n, topic});
    } else if (roll < 5 && mem.size() > 1) {
      std::vector<NodeId> in(mem.begin(), mem.end());
      const NodeId n = in[rng.below(in.size())];
      mem.erase(n);
      script.push_back({t, 1, n, topic});
    } else {
      std::vector<NodeId> in(mem.begin(), mem.end());
      const NodeId n = in[rng.below(in.size())];
      script.push_back({t, 2, n, topic});
    }
  }

  VcubeSystem sys(p.engine, p.hc, *p.sinks.active, &p.metrics, cfg.run_id);
  for (const ScriptedOp& op : script) {
    p.engine.schedule(op.at, [&sys, op] {
      switch (op.kind) {
        case 0: sys.do_subscribe(op.node, op.topic); break;
        case 1: sys.do_unsubscribe(op.node, op.topic); break;
        default: sys.do_publish(op.node, op.topic); break;
      }
    });
  }
  p.engine.run(sys);
  std::vector<TopicId> all_topics(n_topics);
  for (TopicId tt = 0; tt < n_topics; ++tt) all_topics[tt] = tt;
  return p.finish("vcube", &sys, all_topics, false);
}

}  // namespace

RunOutput run_scenario(const RunConfig& cfg) {
  if (cfg.scenario == "single_publisher") return run_single_publisher(cfg);
  if (cfg.scenario == "several_publishers") return run_several_publishers(cfg);
  if (cfg.scenario == "message_order") return run_message_order(cfg);
  if (cfg.scenario == "multi_topic") return run_multi_topic(cfg);
  if (cfg.scenario == "churn") return run_churn(cfg);
  if (cfg.scenario == "broker_compare") return run_broker_compare(cfg);
  if (cfg.scenario == "random_schedule") return run_random_schedule(cfg);
  throw ArgumentError("unknown scenario: " + cfg.scenario);
}

std::string assumption_manifest(const RunConfig& cfg) {
  std::ostringstream os;
  os << "assumptions:\n"
     << "  delay model: t_pc=1 t_t=1 t_pp=" << cfg.ratio
     << " u.t.; one copy queued per destination; t_pc charged per copy\n"
     << "  planes: PUB and PUB-ACK serialize on per-node FIFO output "
        "queues; SUB/UNS and their ACKs use an unqueued control channel "
        "with identical hop latency\n"
     << "  established membership is installed directly (warm start); "
        "churn waves are real SUB/UNS broadcasts\n";
  if (cfg.system == "srpt-s")
    os << "  SRPT-S: static per-topic tree, bit-correction paths (lowest "
          "bit first) to a uniform-random root; publisher reaches the root "
          "in one direct hop; joins/leaves processed at the root, one "
          "data-plane notification per changed tree edge\n";
  if (cfg.system == "srpt-b")
    os << "  SRPT-B: brokers are a uniform random sample mapped onto a "
          "log2(B)-cube, bit-correction broker tree, subscribers attached "
          "round-robin; publication travels publisher -> attached broker "
          "-> root broker -> tree, then per-broker unicasts\n";
  if (cfg.scenario == "message_order")
    os << "  t_w ~ uniform integers in [0,1000] u.t.\n";
  if (cfg.scenario == "multi_topic")
    os << "  per-node exponential publish processes (mean "
       << cfg.publish_interval << " u.t.), all nodes subscribe all topics, "
       << "Zipf coefficient " << cfg.zipf_coeff << "\n";
  if (cfg.scenario == "churn" || cfg.scenario == "broker_compare")
    os << "  global exponential publish process (mean "
       << cfg.publish_interval << " u.t.), publisher uniform among current "
       << "subscribers\n";
  if (cfg.scenario == "several_publishers")
    os << "  one message per publisher at a uniform time in [0,1000] u.t.\n";
  os << "  queue metric: mean = sum of copy waits / [first enqueue, last "
        "transmission end]; peak = max backlog\n";
  return os.str();
}

}  // namespace vcubeps
