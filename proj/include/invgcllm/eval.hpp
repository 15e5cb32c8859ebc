#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "invgcllm/graph.hpp"
#include "invgcllm/interactions.hpp"
#include "invgcllm/params.hpp"

namespace invgcllm {

struct UserMetrics {
  std::int64_t user_id = 0;
  double ndcg = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t hits = 0;
  std::size_t relevant = 0;
};

struct MetricsReport {
  std::size_t k = 10;
  double ndcg = 0.0;       // macro-averaged over evaluated users
  double precision = 0.0;
  double recall = 0.0;
  std::size_t users_evaluated = 0;
  std::size_t users_skipped = 0;  // no usable relevant items
  std::size_t unmapped_rows = 0;  // test rows whose ids are outside the node space
  std::vector<UserMetrics> per_user;
};

// Scores every item by dot product with the user row, drops `exclude`
// (sorted item indices, typically the user's train items), sorts score
// descending with ties by item index.
std::vector<std::uint32_t> rank_items(std::uint32_t user, const DenseMatrix& h,
                                      std::size_t num_users, std::size_t num_items,
                                      std::span<const std::uint32_t> exclude_sorted);

// Binary-relevance precision/recall/NDCG at K against a sorted relevant set.
UserMetrics metrics_at_k(std::span<const std::uint32_t> ranked,
                         std::span<const std::uint32_t> relevant_sorted, std::size_t k);

// Macro-average over users with at least one relevant test item. Relevant
// items are the user's test items minus their train items (train items are
// excluded from the candidate ranking and can never be hit).
MetricsReport evaluate(const ParameterSet& params, const BipartiteGraph& g_train,
                       const std::vector<Interaction>& test, std::size_t k);

std::string metrics_table(const MetricsReport& r);
void write_metrics_csv(const std::string& path, const MetricsReport& r);
void write_per_user_csv(const std::string& path, const MetricsReport& r);

// Top-2 principal-component projection; the sign of each component is
// fixed by making its largest-magnitude loading positive.
struct Projection {
  std::vector<std::array<double, 2>> coords;
  std::array<std::vector<double>, 2> components;
  bool rank_deficient = false;  // second coordinate zeroed
};
Projection project_2d(const DenseMatrix& rows);

void write_projection_csv(const std::string& path, const Projection& p,
                          std::span<const std::int64_t> node_ids,
                          std::span<const std::string> labels);

}  // namespace invgcllm
