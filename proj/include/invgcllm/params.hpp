#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "invgcllm/linalg.hpp"

namespace invgcllm {

using Gradient = std::vector<double>;

// Edge-score MLP: concat(2d) -> hidden (tanh) -> scalar.
struct MlpParams {
  DenseMatrix w1;           // hidden x 2d
  std::vector<double> b1;   // hidden
  std::vector<double> w2;   // hidden
  double b2 = 0.0;

  std::size_t hidden() const { return b1.size(); }
  std::size_t size() const { return w1.values.size() + b1.size() + w2.size() + 1; }
};

// All trainable values. Flat ordering (documented, stable):
//   [embedding rows | mask_embedding rows | w1 rows | b1 | w2 | b2]
// The stage-1 sub-vector starts at stage1_offset() and covers the mask
// embedding table plus the MLP.
struct ParameterSet {
  DenseMatrix embedding;       // X: num_nodes x dim, main encoder table
  DenseMatrix mask_embedding;  // num_nodes x dim, edge-score model table
  MlpParams mlp;

  std::size_t dim = 0;
  int layers = 3;       // main propagation depth
  int mask_layers = 1;  // edge-score propagation depth
  std::uint64_t seed = 0;

  // X ~ N(0, 0.1); MLP weights ~ N(0, 0.1/sqrt(fan_in)); biases 0.
  static ParameterSet init(std::size_t num_nodes, std::size_t dim, int layers,
                           int mask_layers, std::size_t mlp_hidden, std::uint64_t seed);

  std::size_t num_nodes() const { return embedding.rows; }
  std::size_t flat_size() const;
  std::size_t stage1_offset() const { return embedding.values.size(); }
  std::size_t stage1_size() const { return flat_size() - stage1_offset(); }

  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
  std::vector<double> stage1_flatten() const;
  void stage1_unflatten(std::span<const double> flat);

  bool all_finite() const;
};

// Checkpoint: versioned text header describing shapes, then the flat
// parameter vector as 64-bit little-endian reals.
void save_checkpoint(const ParameterSet& p, const std::string& path);
ParameterSet load_checkpoint(const std::string& path);

}  // namespace invgcllm
