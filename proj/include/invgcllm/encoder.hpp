#pragma once

#include "invgcllm/linalg.hpp"
#include "invgcllm/params.hpp"

namespace invgcllm {

// Embeddings of the three graph views, produced from shared parameters.
struct ViewEmbeddings {
  DenseMatrix main;      // from the original graph
  DenseMatrix causal;    // from the causal view
  DenseMatrix spurious;  // from the spurious view
};

// Z(0) = x; Z(l) = adj * Z(l-1); output = mean of Z(0)..Z(layers).
// Degree-0 rows come out as x_row / (layers + 1).
DenseMatrix propagate(const SparseMatrix& adj, const DenseMatrix& x, int layers);

// Adjoint of propagate w.r.t. x: sum_l (adjᵀ)^l * upstream / (layers + 1).
// propagate is linear in x, so no forward state is needed.
DenseMatrix propagate_backward(const SparseMatrix& adj, int layers,
                               const DenseMatrix& upstream);

// Three propagations of the same table; normalization is per view (the
// adjacencies are built from each view's own degrees).
ViewEmbeddings encode_views(const SparseMatrix& adj, const SparseMatrix& adj_causal,
                            const SparseMatrix& adj_spurious, const DenseMatrix& x,
                            int layers);

}  // namespace invgcllm
