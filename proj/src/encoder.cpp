#include "invgcllm/encoder.hpp"

#include <stdexcept>

namespace invgcllm {

DenseMatrix propagate(const SparseMatrix& adj, const DenseMatrix& x, int layers) {
  if (layers < 0) throw std::invalid_argument("propagate: layers must be >= 0");
  if (adj.rows != adj.cols || adj.cols != x.rows)
    throw std::invalid_argument("propagate: adjacency/embedding shape mismatch");
  DenseMatrix sum = x;
  DenseMatrix z = x;
  for (int l = 1; l <= layers; ++l) {
    z = spmm(adj, z);
    sum.add_scaled(z, 1.0);
  }
  sum.scale(1.0 / static_cast<double>(layers + 1));
  return sum;
}

DenseMatrix propagate_backward(const SparseMatrix& adj, int layers,
                               const DenseMatrix& upstream) {
  if (layers < 0) throw std::invalid_argument("propagate_backward: layers must be >= 0");
  if (adj.rows != adj.cols || adj.cols != upstream.rows)
    throw std::invalid_argument("propagate_backward: shape mismatch");
  DenseMatrix sum = upstream;
  DenseMatrix t = upstream;
  for (int l = 1; l <= layers; ++l) {
    t = spmm_transposed(adj, t);
    sum.add_scaled(t, 1.0);
  }
  sum.scale(1.0 / static_cast<double>(layers + 1));
  return sum;
}

ViewEmbeddings encode_views(const SparseMatrix& adj, const SparseMatrix& adj_causal,
                            const SparseMatrix& adj_spurious, const DenseMatrix& x,
                            int layers) {
  if (adj.rows != adj_causal.rows || adj.rows != adj_spurious.rows)
    throw std::invalid_argument("encode_views: views disagree on node space");
  ViewEmbeddings v;
  v.main = propagate(adj, x, layers);
  v.causal = propagate(adj_causal, x, layers);
  v.spurious = propagate(adj_spurious, x, layers);
  return v;
}

}  // namespace invgcllm
