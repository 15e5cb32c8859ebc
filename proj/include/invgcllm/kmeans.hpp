#pragma once

#include <cstdint>
#include <vector>

#include "invgcllm/linalg.hpp"

namespace invgcllm {

struct KMeansResult {
  std::size_t k = 0;
  std::vector<int> assignment;          // per point, in [0, k)
  DenseMatrix centroids;                // k x dim
  std::vector<double> objective_trace;  // within-cluster variance per iteration
  bool k_reduced = false;               // true when k was clipped to |points|
};

// k-means++ seeding, Lloyd iterations, stop when the objective improves by
// less than tol or max_iter is hit. Empty clusters are repaired by
// re-seeding with the point farthest from its centroid. k > |points| is
// reduced to |points| (flagged in the result).
KMeansResult kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 100, double tol = 1e-8);

}  // namespace invgcllm
