#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "invgcllm/interactions.hpp"

namespace invgcllm {

enum class SplitKind { Temporal, Popularity, Exposure };

SplitKind split_kind_from_name(std::string_view name);
std::string split_kind_name(SplitKind k);

struct SplitSpec {
  SplitKind kind = SplitKind::Temporal;
  double train_frac = 0.6;
  double test_frac = 0.2;
  std::uint64_t seed = 0;
};

// train/test/held_out partition the input; train and test are disjoint.
struct DataSplit {
  std::vector<Interaction> train;
  std::vector<Interaction> test;
  std::vector<Interaction> held_out;
};

// Sort by (timestamp, user, item); earliest floor(train_frac*n) -> train,
// latest ceil(test_frac*n) -> test, middle -> held_out.
DataSplit temporal_split(std::vector<Interaction> xs, double train_frac = 0.6,
                         double test_frac = 0.2);

// Smallest per-item cap c with sum_i min(n_i, c) >= test_frac*n; per item,
// min(n_i, c) interactions are sampled (seeded, uniform) into a pool which
// is then downsampled to exactly ceil(test_frac*n). Remainder -> train.
DataSplit popularity_split(std::vector<Interaction> xs, double test_frac,
                           std::uint64_t seed);

struct ExposureReport {
  std::vector<std::int64_t> cold_users;  // test users with zero train rows
  std::vector<std::int64_t> cold_items;
  std::size_t overlap_pairs = 0;  // (u,i) present in both files
};

// Loads both files as-is; no resampling.
DataSplit exposure_split(const std::string& train_path, const std::string& test_path,
                         InteractionFormat format, bool tsv_header,
                         ExposureReport* report = nullptr);

// Plain-text summary: counts plus a per-item test-popularity histogram.
std::string split_summary(const DataSplit& split, const ExposureReport* report = nullptr);

}  // namespace invgcllm
