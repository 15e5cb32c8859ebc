#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "invgcllm/interactions.hpp"
#include "invgcllm/linalg.hpp"

namespace invgcllm {

// An observed (user, item) pair in dense-index space.
struct EdgeKey {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  auto operator<=>(const EdgeKey&) const = default;
};

struct Edge {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::int64_t timestamp = 0;
  EdgeKey key() const { return {user, item}; }
};

// User-item bipartite graph over dense indices. Users occupy node indices
// [0, num_users); item i maps to node num_users + i. Ids are re-indexed by
// first appearance in the interaction sequence, so rebuilds from the same
// input are identical.
struct BipartiteGraph {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<Edge> edges;  // unique per (user, item), sorted by (user, item)
  std::vector<std::int64_t> user_ids;  // dense index -> original id
  std::vector<std::int64_t> item_ids;
  std::unordered_map<std::int64_t, std::uint32_t> user_index;
  std::unordered_map<std::int64_t, std::uint32_t> item_index;
  std::vector<std::vector<std::uint32_t>> items_of_user;  // sorted

  std::size_t num_nodes() const { return num_users + num_items; }
  std::uint32_t item_node(std::uint32_t item) const {
    return static_cast<std::uint32_t>(num_users) + item;
  }
  bool has_edge(std::uint32_t user, std::uint32_t item) const;
  std::size_t user_degree(std::uint32_t user) const { return items_of_user[user].size(); }

  std::vector<EdgeKey> edge_keys() const;

  // 0/1 symmetric adjacency over (num_users + num_items)^2.
  SparseMatrix binary_adjacency() const;
};

struct EmptyGraphError : std::runtime_error {
  EmptyGraphError() : std::runtime_error("cannot build a graph from zero interactions") {}
};

// Dense re-indexing by first appearance; duplicate (user, item) pairs
// collapse to one edge keeping the latest timestamp.
BipartiteGraph build_graph(const std::vector<Interaction>& interactions);

// Registers ids appearing only in `extra` (e.g. test rows) so they get
// embedding rows; adds no edges.
void extend_node_space(BipartiteGraph& g, const std::vector<Interaction>& extra);

// Symmetric normalization: weight(u,i) = 1/sqrt(deg(u) * deg(i)) for every
// stored edge, both directions. Degree-0 nodes contribute no entries.
SparseMatrix normalize_adjacency(const BipartiteGraph& g);
SparseMatrix normalize_adjacency(std::size_t num_users, std::size_t num_items,
                                 std::span<const EdgeKey> edges);

}  // namespace invgcllm
