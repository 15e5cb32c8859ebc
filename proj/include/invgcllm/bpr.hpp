#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "invgcllm/graph.hpp"
#include "invgcllm/linalg.hpp"
#include "invgcllm/rng.hpp"

namespace invgcllm {

// A ranking triple in node-index space: user prefers pos over neg.
struct BprTriple {
  std::uint32_t user_node = 0;
  std::uint32_t pos_node = 0;
  std::uint32_t neg_node = 0;
};

struct BprResult {
  double loss = 0.0;
  DenseMatrix grad_h;  // d loss / d embeddings
};

// -sum ln sigma(h_u·h_i - h_u·h_j) over the triples; `average` divides
// loss and gradient by the triple count (risk convention).
BprResult bpr_loss_grad(const DenseMatrix& h, std::span<const BprTriple> triples,
                        bool average);

// Directional derivative of (loss, grad_h) along dh. Used for exact
// Hessian-vector products of the environment risks.
struct BprTangentResult {
  double dloss = 0.0;
  DenseMatrix dgrad_h;
};
BprTangentResult bpr_grad_tangent(const DenseMatrix& h, const DenseMatrix& dh,
                                  std::span<const BprTriple> triples, bool average);

// Uniform over items the user has not interacted with; nullopt when the
// user has interacted with every item.
std::optional<std::uint32_t> sample_negative(const BipartiteGraph& g, std::uint32_t user,
                                             Rng& rng);

// Numerically stable ln(1 + exp(-m)) and sigmoid.
double softplus_neg(double margin);
double sigmoid(double x);

}  // namespace invgcllm
