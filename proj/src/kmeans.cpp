#include "invgcllm/kmeans.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "invgcllm/rng.hpp"

namespace invgcllm {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

KMeansResult kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter, double tol) {
  const std::size_t n = points.rows;
  const std::size_t dim = points.cols;
  if (n == 0) throw std::invalid_argument("kmeans: no points");
  if (k == 0) throw std::invalid_argument("kmeans: k must be >= 1");

  KMeansResult res;
  res.k_reduced = k > n;
  if (res.k_reduced) k = n;
  res.k = k;

  Rng rng(seed);

  // k-means++ seeding
  res.centroids = DenseMatrix(k, dim);
  std::vector<double> d2(n, std::numeric_limits<double>::max());
  std::size_t first = rng.uniform_index(n);
  std::copy_n(points.row(first).data(), dim, res.centroids.row(0).data());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(points.row(i), res.centroids.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.uniform_index(n);
    } else {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    }
    std::copy_n(points.row(pick).data(), dim, res.centroids.row(c).data());
  }

  res.assignment.assign(n, 0);
  std::vector<std::size_t> counts(k, 0);
  double prev_obj = std::numeric_limits<double>::max();

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // Assign
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      int best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(points.row(i), res.centroids.row(c));
        if (d < best) {
          best = d;
          best_c = static_cast<int>(c);
        }
      }
      res.assignment[i] = best_c;
      obj += best;
    }

    // Empty-cluster repair: seize the point farthest from its centroid.
    counts.assign(k, 0);
    for (int a : res.assignment) ++counts[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      double far = -1.0;
      std::size_t far_i = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(res.assignment[i])] <= 1) continue;
        const double d =
            sq_dist(points.row(i),
                    res.centroids.row(static_cast<std::size_t>(res.assignment[i])));
        if (d > far) {
          far = d;
          far_i = i;
        }
      }
      if (far < 0.0) break;  // nothing movable
      --counts[static_cast<std::size_t>(res.assignment[far_i])];
      obj -= far;  // its distance to its own new centroid becomes 0
      res.assignment[far_i] = static_cast<int>(c);
      counts[c] = 1;
      std::copy_n(points.row(far_i).data(), dim, res.centroids.row(c).data());
    }

    res.objective_trace.push_back(obj);

    // Update
    DenseMatrix next(k, dim);
    counts.assign(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(res.assignment[i]);
      ++counts[c];
      auto row = points.row(i);
      for (std::size_t j = 0; j < dim; ++j) next(c, j) += row[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        std::copy_n(res.centroids.row(c).data(), dim, next.row(c).data());
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j)
        next(c, j) /= static_cast<double>(counts[c]);
    }
    res.centroids = std::move(next);

    if (prev_obj - obj < tol) break;
    prev_obj = obj;
  }
  return res;
}

}  // namespace invgcllm
