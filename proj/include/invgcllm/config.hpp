#pragma once

#include <cstdint>
#include <string>

#include "invgcllm/interactions.hpp"
#include "invgcllm/splits.hpp"

namespace invgcllm {

// Whole-pipeline configuration, read from a sectioned key-value file.
// Unknown sections or keys are errors. Numeric defaults follow the
// reference setup: 100 epochs, batch 256, lr 1e-4, 3 layers, lambda 0.05,
// metrics at K = 10.
struct PipelineConfig {
  // [data]
  std::string data_path;
  std::string test_path;  // exposure split only
  std::string format = "tsv";
  bool tsv_header = false;
  double min_rating = 0.0;  // 0 disables the filter
  std::string catalog_path;

  // [split]
  std::string split_kind = "temporal";
  double train_frac = 0.6;
  double test_frac = 0.2;

  // [model]
  std::size_t dim = 64;
  int layers = 3;
  int mask_layers = 1;
  std::size_t mlp_hidden = 0;  // 0 = dim

  // [stage1]
  double alpha = 0.1;
  double beta = 1.0;
  double tau = 0.7;
  std::size_t environments = 4;
  int stage1_epochs = 100;  // j
  double stage1_lr = 1e-4;
  int refresh_every = 0;

  // [edit]
  std::size_t k_edit = 0;  // 0 = ceil(0.05 * |E|)
  std::string backend = "mock";
  std::string base_url;
  std::string model_name;
  std::string labels_path;
  std::string add_pairs_path;
  bool propose_additions = false;
  std::size_t max_additions_per_user = 0;
  std::string cache_path;  // default <out>/decision_cache.jsonl
  std::size_t concurrency = 4;

  // [train]
  double lambda = 0.05;
  double temperature = 0.2;
  std::size_t batch_size = 256;
  int train_epochs = 100;  // k
  double learning_rate = 1e-4;
  bool bpr_only = false;

  // [eval]
  std::size_t k_metric = 10;
  bool projection = true;

  // [run]
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  bool deterministic = true;

  // Canonical serialization (sorted key=value lines); its hash content-
  // addresses every stage output.
  std::string canonical() const;
  std::string hash() const;

  void validate() const;  // range checks; throws ConfigError naming the field
};

PipelineConfig parse_config_text(const std::string& text, const std::string& origin);
PipelineConfig load_config(const std::string& path);

}  // namespace invgcllm
