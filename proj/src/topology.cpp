#include "vcubeps/topology.hpp"

#include <bit>

namespace vcubeps::topology {

void check_node(NodeId i, const HypercubeConfig& cfg) {
  if (i >= cfg.size) throw ArgumentError("node id out of range");
}

static void check_cluster(int s, const HypercubeConfig& cfg) {
  if (s < 1 || s > cfg.dimension) throw ArgumentError("cluster index out of range");
}

std::vector<NodeId> cluster_members(NodeId i, int s, const HypercubeConfig& cfg) {
  check_node(i, cfg);
  check_cluster(s, cfg);
  const std::uint32_t n = std::uint32_t{1} << (s - 1);
  std::vector<NodeId> out;
  out.reserve(n);
  const NodeId base = i ^ n;
  for (std::uint32_t k = 0; k < n; ++k) out.push_back(base ^ k);
  return out;
}

int cluster_index(NodeId i, NodeId j, const HypercubeConfig& cfg) {
  check_node(i, cfg);
  check_node(j, cfg);
  if (i == j) throw ArgumentError("cluster_index requires i != j");
  return std::bit_width(i ^ j);  // position of MSB of the xor, 1-based
}

std::vector<NodeId> children(NodeId i, const MemberPred& pred, int h,
                             const HypercubeConfig& cfg) {
  check_node(i, cfg);
  if (h < 0 || h > cfg.dimension) throw ArgumentError("children: h out of range");
  std::vector<NodeId> out;
  out.reserve(static_cast<std::size_t>(h));
  for (int s = 1; s <= h; ++s) {
    const std::uint32_t n = std::uint32_t{1} << (s - 1);
    const NodeId base = i ^ n;
    for (std::uint32_t k = 0; k < n; ++k) {
      const NodeId cand = base ^ k;
      if (pred(cand)) {
        out.push_back(cand);
        break;
      }
    }
  }
  return out;
}

std::vector<NodeId> children_all(NodeId i, int h, const HypercubeConfig& cfg) {
  check_node(i, cfg);
  if (h < 0 || h > cfg.dimension) throw ArgumentError("children: h out of range");
  std::vector<NodeId> out;
  out.reserve(static_cast<std::size_t>(h));
  for (int s = 1; s <= h; ++s) out.push_back(i ^ (NodeId{1} << (s - 1)));
  return out;
}

std::vector<NodeId> sub_vcube(NodeId i, int k, const HypercubeConfig& cfg) {
  check_node(i, cfg);
  check_cluster(k, cfg);
  const std::uint32_t n = std::uint32_t{1} << (k - 1);
  const NodeId base = (i >> (k - 1)) << (k - 1);
  std::vector<NodeId> out;
  out.reserve(n);
  for (std::uint32_t j = 0; j < n; ++j) out.push_back(base + j);
  return out;
}

}  // namespace vcubeps::topology
