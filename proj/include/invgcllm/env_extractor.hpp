#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "invgcllm/encoder.hpp"
#include "invgcllm/graph.hpp"
#include "invgcllm/kmeans.hpp"
#include "invgcllm/params.hpp"

namespace invgcllm {

// Per-edge invariance scores; keys are exactly the observed edge set,
// values clamped to [1e-6, 1 - 1e-6].
struct EdgeScores {
  std::vector<EdgeKey> edges;  // sorted (user, item)
  std::vector<double> values;  // aligned with edges

  double at(EdgeKey e) const;
  std::size_t index_of(EdgeKey e) const;  // throws if absent
};

// Gradient of a scalar w.r.t. the stage-1 parameters (edge-score model).
// Flat ordering matches ParameterSet::stage1_flatten.
struct MaskModelGrad {
  DenseMatrix mask_embedding;
  DenseMatrix w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;

  static MaskModelGrad zeros_like(const ParameterSet& p);
  void axpy(double a, const MaskModelGrad& other);
  void scale(double a);
  std::vector<double> flatten() const;
};

// Forward state of the edge-score model, kept for backprop.
struct EdgeScoreCache {
  DenseMatrix h_mask;               // propagated mask-table embeddings
  DenseMatrix hidden_tanh;          // |E| x hidden
  std::vector<double> sig;          // sigmoid(pre), unclamped
  std::vector<std::uint8_t> clamped;
};

// s(u,i) = sigmoid(MLP(h_u ⊕ h_i)) with h from propagating the mask table
// over the full-graph adjacency (params.mask_layers hops).
EdgeScores score_edges(const BipartiteGraph& g, const SparseMatrix& adj,
                       const ParameterSet& params, EdgeScoreCache* cache = nullptr);

// Accumulates d(loss)/d(stage-1 params) given d(loss)/d(score) per edge.
// Clamped edges propagate zero gradient.
void score_edges_backward(const BipartiteGraph& g, const SparseMatrix& adj,
                          const ParameterSet& params, const EdgeScoreCache& cache,
                          std::span<const double> dscore, MaskModelGrad& grad);

// Score one arbitrary (user, item) pair with the same model; used by the
// addition proposer on unobserved pairs.
double score_pair(const BipartiteGraph& g, const DenseMatrix& h_mask,
                  const ParameterSet& params, std::uint32_t user, std::uint32_t item);

// Lossless partition of the edge set: invariant = the ceil(tau * |E|)
// highest-scored edges (ties by (user, item)), variant = the rest.
struct Decomposition {
  std::vector<EdgeKey> invariant_edges;  // sorted
  std::vector<EdgeKey> variant_edges;    // sorted
  double tau = 0.7;
};
Decomposition decompose(const BipartiteGraph& g, const EdgeScores& scores, double tau);

// Interaction embeddings for the variant edges: propagate the main table
// over the variant-only subgraph, then z(u,i) = H[u] ⊕ H[item_node(i)].
struct VariantEmbeddings {
  std::vector<EdgeKey> edges;
  DenseMatrix z;  // |variant| x 2d
};
VariantEmbeddings variant_embeddings(const BipartiteGraph& g,
                                     std::span<const EdgeKey> variant,
                                     const ParameterSet& params);

struct EnvironmentPartition {
  std::size_t k = 0;
  std::vector<EdgeKey> edges;    // the variant edges that were clustered
  std::vector<int> assignment;   // aligned with edges
  DenseMatrix centroids;         // k x 2d
  bool k_reduced = false;
};

// K-means over variant interaction embeddings. Falls back to a single
// environment when the variant set is empty.
EnvironmentPartition infer_environments(const BipartiteGraph& g,
                                        const Decomposition& dec,
                                        const ParameterSet& params, std::size_t k,
                                        std::uint64_t seed);

}  // namespace invgcllm
