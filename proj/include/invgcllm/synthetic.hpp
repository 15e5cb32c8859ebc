#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "invgcllm/interactions.hpp"

namespace invgcllm {

// Synthetic benchmark with a controlled shift. Causal interactions come
// from shared latent factors and appear in train and test alike; spurious
// interactions attach users to "trendy" item pools that exist only in the
// training environments (two pools, so environment inference has structure
// to find). Ground-truth labels feed the mock adjudicator.
struct SyntheticConfig {
  std::size_t num_users = 24;
  std::size_t num_items = 48;
  std::size_t latent_dim = 4;
  std::size_t causal_per_user = 6;    // train causal edges per user
  std::size_t test_per_user = 3;      // held-out causal edges per user
  std::size_t spurious_per_user = 4;  // train-only confounded edges per user
  std::size_t trendy_items = 12;      // split into two environment pools
  std::uint64_t seed = 0;
};

struct SyntheticData {
  std::vector<Interaction> train;
  std::vector<Interaction> test;
  // (user id, item id, spurious?) for every train edge
  std::vector<std::tuple<std::int64_t, std::int64_t, bool>> labels;
  // latent-consistent unobserved pairs, for the addition proposer's oracle
  std::vector<std::pair<std::int64_t, std::int64_t>> consistent_pairs;
  std::vector<std::pair<std::int64_t, std::string>> catalog;
};

SyntheticData generate_synthetic(const SyntheticConfig& cfg);

// Writes train.tsv, test.tsv, labels.tsv, consistent_pairs.tsv, catalog.tsv.
void write_synthetic(const SyntheticData& data, const std::string& dir);

}  // namespace invgcllm
