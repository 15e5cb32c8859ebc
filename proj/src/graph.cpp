#include "invgcllm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace invgcllm {

bool BipartiteGraph::has_edge(std::uint32_t user, std::uint32_t item) const {
  const auto& items = items_of_user[user];
  return std::binary_search(items.begin(), items.end(), item);
}

std::vector<EdgeKey> BipartiteGraph::edge_keys() const {
  std::vector<EdgeKey> out;
  out.reserve(edges.size());
  for (const Edge& e : edges) out.push_back(e.key());
  return out;
}

SparseMatrix BipartiteGraph::binary_adjacency() const {
  std::vector<SparseMatrix::Entry> es;
  es.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    const std::uint32_t a = e.user;
    const std::uint32_t b = item_node(e.item);
    es.push_back({a, b, 1.0});
    es.push_back({b, a, 1.0});
  }
  return SparseMatrix::from_entries(num_nodes(), num_nodes(), std::move(es));
}

BipartiteGraph build_graph(const std::vector<Interaction>& interactions) {
  if (interactions.empty()) throw EmptyGraphError();

  BipartiteGraph g;
  // (user, item) -> latest timestamp
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::int64_t> latest;
  for (const Interaction& x : interactions) {
    auto [uit, unew] = g.user_index.try_emplace(
        x.user, static_cast<std::uint32_t>(g.user_ids.size()));
    if (unew) g.user_ids.push_back(x.user);
    auto [iit, inew] = g.item_index.try_emplace(
        x.item, static_cast<std::uint32_t>(g.item_ids.size()));
    if (inew) g.item_ids.push_back(x.item);

    auto [eit, enew] = latest.try_emplace({uit->second, iit->second}, x.timestamp);
    if (!enew) eit->second = std::max(eit->second, x.timestamp);
  }
  g.num_users = g.user_ids.size();
  g.num_items = g.item_ids.size();
  g.edges.reserve(latest.size());
  for (const auto& [key, ts] : latest) g.edges.push_back({key.first, key.second, ts});

  g.items_of_user.assign(g.num_users, {});
  for (const Edge& e : g.edges) g.items_of_user[e.user].push_back(e.item);
  return g;
}

void extend_node_space(BipartiteGraph& g, const std::vector<Interaction>& extra) {
  for (const Interaction& x : extra) {
    auto [uit, unew] = g.user_index.try_emplace(
        x.user, static_cast<std::uint32_t>(g.user_ids.size()));
    if (unew) g.user_ids.push_back(x.user);
    auto [iit, inew] = g.item_index.try_emplace(
        x.item, static_cast<std::uint32_t>(g.item_ids.size()));
    if (inew) g.item_ids.push_back(x.item);
  }
  g.num_users = g.user_ids.size();
  g.num_items = g.item_ids.size();
  g.items_of_user.resize(g.num_users);
  // Item node indices shift when users are appended; edges store user/item
  // indices separately so nothing else needs fixing.
}

SparseMatrix normalize_adjacency(std::size_t num_users, std::size_t num_items,
                                 std::span<const EdgeKey> edges) {
  std::vector<std::uint32_t> udeg(num_users, 0), ideg(num_items, 0);
  for (const EdgeKey& e : edges) {
    ++udeg[e.user];
    ++ideg[e.item];
  }
  std::vector<SparseMatrix::Entry> es;
  es.reserve(edges.size() * 2);
  const std::uint32_t base = static_cast<std::uint32_t>(num_users);
  for (const EdgeKey& e : edges) {
    const double w = 1.0 / std::sqrt(static_cast<double>(udeg[e.user]) *
                                     static_cast<double>(ideg[e.item]));
    es.push_back({e.user, base + e.item, w});
    es.push_back({base + e.item, e.user, w});
  }
  const std::size_t n = num_users + num_items;
  return SparseMatrix::from_entries(n, n, std::move(es));
}

SparseMatrix normalize_adjacency(const BipartiteGraph& g) {
  return normalize_adjacency(g.num_users, g.num_items, g.edge_keys());
}

}  // namespace invgcllm
