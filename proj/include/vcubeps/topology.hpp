#pragma once

#include <functional>
#include <vector>

#include "vcubeps/core.hpp"

// Combinatorics of the virtual d-dimensional hypercube: cluster membership,
// cluster indexing, dynamic children selection and sub-hypercube sets. All
// functions are pure and thread-safe.

namespace vcubeps::topology {

/// Membership predicate for children(). Return true if the node qualifies.
using MemberPred = std::function<bool(NodeId)>;

/// Wildcard predicate: every node qualifies (SUB floods).
inline bool wildcard(NodeId) { return true; }

/// Ordered cluster c_{i,s}: the 2^(s-1) nodes of node i's cluster s, first
/// element i^2^(s-1), then the neighbor's clusters 1..s-1 concatenated.
/// The recursive concatenation collapses to xor enumeration:
/// c_{i,s}[j] = (i ^ 2^(s-1)) ^ j.
std::vector<NodeId> cluster_members(NodeId i, int s, const HypercubeConfig& cfg);

/// k-th element of c_{i,s} without materializing the list.
inline NodeId cluster_member_at(NodeId i, int s, std::uint32_t k) {
  return (i ^ (NodeId{1} << (s - 1))) ^ k;
}

/// Index s of the cluster of i that contains j (most significant differing
/// bit, 1-based). Requires i != j.
int cluster_index(NodeId i, NodeId j, const HypercubeConfig& cfg);

/// Children of i in a spanning tree over the members selected by `pred`:
/// for each cluster s = 1..h, the first node of c_{i,s} satisfying `pred`,
/// in cluster order. h = 0 yields the empty set.
std::vector<NodeId> children(NodeId i, const MemberPred& pred, int h,
                             const HypercubeConfig& cfg);

/// children() with the wildcard membership (first node of every cluster).
std::vector<NodeId> children_all(NodeId i, int h, const HypercubeConfig& cfg);

/// SubVC(i,k): the 2^(k-1) nodes sharing i's bits above position k-1 (the
/// half of the k-cube containing i). Contiguous id range.
std::vector<NodeId> sub_vcube(NodeId i, int k, const HypercubeConfig& cfg);

void check_node(NodeId i, const HypercubeConfig& cfg);

}  // namespace vcubeps::topology
