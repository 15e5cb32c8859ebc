#include "invgcllm/env_extractor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "invgcllm/bpr.hpp"

namespace invgcllm {

namespace {
constexpr double kScoreLo = 1e-6;
constexpr double kScoreHi = 1.0 - 1e-6;
}  // namespace

double EdgeScores::at(EdgeKey e) const { return values[index_of(e)]; }

std::size_t EdgeScores::index_of(EdgeKey e) const {
  const auto it = std::lower_bound(edges.begin(), edges.end(), e);
  if (it == edges.end() || *it != e)
    throw std::invalid_argument("EdgeScores: unknown edge");
  return static_cast<std::size_t>(it - edges.begin());
}

MaskModelGrad MaskModelGrad::zeros_like(const ParameterSet& p) {
  MaskModelGrad g;
  g.mask_embedding = DenseMatrix(p.mask_embedding.rows, p.mask_embedding.cols);
  g.w1 = DenseMatrix(p.mlp.w1.rows, p.mlp.w1.cols);
  g.b1.assign(p.mlp.b1.size(), 0.0);
  g.w2.assign(p.mlp.w2.size(), 0.0);
  g.b2 = 0.0;
  return g;
}

void MaskModelGrad::axpy(double a, const MaskModelGrad& o) {
  mask_embedding.add_scaled(o.mask_embedding, a);
  w1.add_scaled(o.w1, a);
  for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += a * o.b1[i];
  for (std::size_t i = 0; i < w2.size(); ++i) w2[i] += a * o.w2[i];
  b2 += a * o.b2;
}

void MaskModelGrad::scale(double a) {
  mask_embedding.scale(a);
  w1.scale(a);
  for (double& v : b1) v *= a;
  for (double& v : w2) v *= a;
  b2 *= a;
}

std::vector<double> MaskModelGrad::flatten() const {
  std::vector<double> out;
  out.reserve(mask_embedding.values.size() + w1.values.size() + b1.size() + w2.size() + 1);
  out.insert(out.end(), mask_embedding.values.begin(), mask_embedding.values.end());
  out.insert(out.end(), w1.values.begin(), w1.values.end());
  out.insert(out.end(), b1.begin(), b1.end());
  out.insert(out.end(), w2.begin(), w2.end());
  out.push_back(b2);
  return out;
}

EdgeScores score_edges(const BipartiteGraph& g, const SparseMatrix& adj,
                       const ParameterSet& params, EdgeScoreCache* cache) {
  const std::size_t d = params.dim;
  const std::size_t hidden = params.mlp.hidden();
  const DenseMatrix h = propagate(adj, params.mask_embedding, params.mask_layers);

  EdgeScores s;
  s.edges = g.edge_keys();
  s.values.resize(s.edges.size());
  DenseMatrix hidden_tanh(s.edges.size(), hidden);
  std::vector<double> sig(s.edges.size());
  std::vector<std::uint8_t> clamped(s.edges.size(), 0);

  std::vector<double> concat(2 * d);
  for (std::size_t e = 0; e < s.edges.size(); ++e) {
    const EdgeKey key = s.edges[e];
    const auto hu = h.row(key.user);
    const auto hi = h.row(g.item_node(key.item));
    std::copy(hu.begin(), hu.end(), concat.begin());
    std::copy(hi.begin(), hi.end(), concat.begin() + static_cast<std::ptrdiff_t>(d));

    double pre = params.mlp.b2;
    for (std::size_t j = 0; j < hidden; ++j) {
      double a = params.mlp.b1[j];
      const double* w = params.mlp.w1.values.data() + j * 2 * d;
      for (std::size_t c = 0; c < 2 * d; ++c) a += w[c] * concat[c];
      const double t = std::tanh(a);
      hidden_tanh(e, j) = t;
      pre += params.mlp.w2[j] * t;
    }
    const double raw = sigmoid(pre);
    sig[e] = raw;
    double v = raw;
    if (v < kScoreLo) {
      v = kScoreLo;
      clamped[e] = 1;
    } else if (v > kScoreHi) {
      v = kScoreHi;
      clamped[e] = 1;
    }
    s.values[e] = v;
  }

  if (cache) {
    cache->h_mask = h;
    cache->hidden_tanh = std::move(hidden_tanh);
    cache->sig = std::move(sig);
    cache->clamped = std::move(clamped);
  }
  return s;
}

void score_edges_backward(const BipartiteGraph& g, const SparseMatrix& adj,
                          const ParameterSet& params, const EdgeScoreCache& cache,
                          std::span<const double> dscore, MaskModelGrad& grad) {
  const std::size_t d = params.dim;
  const std::size_t hidden = params.mlp.hidden();
  const std::size_t ne = g.edges.size();
  if (dscore.size() != ne)
    throw std::invalid_argument("score_edges_backward: dscore length mismatch");

  DenseMatrix dh(cache.h_mask.rows, cache.h_mask.cols);
  std::vector<double> concat(2 * d), dconcat(2 * d);

  for (std::size_t e = 0; e < ne; ++e) {
    if (dscore[e] == 0.0 || cache.clamped[e]) continue;
    const EdgeKey key = g.edges[e].key();
    const auto hu = cache.h_mask.row(key.user);
    const auto hi = cache.h_mask.row(g.item_node(key.item));
    std::copy(hu.begin(), hu.end(), concat.begin());
    std::copy(hi.begin(), hi.end(), concat.begin() + static_cast<std::ptrdiff_t>(d));
    std::fill(dconcat.begin(), dconcat.end(), 0.0);

    const double s = cache.sig[e];
    const double dpre = dscore[e] * s * (1.0 - s);
    grad.b2 += dpre;
    for (std::size_t j = 0; j < hidden; ++j) {
      const double t = cache.hidden_tanh(e, j);
      grad.w2[j] += dpre * t;
      const double da = dpre * params.mlp.w2[j] * (1.0 - t * t);
      grad.b1[j] += da;
      double* gw1 = grad.w1.values.data() + j * 2 * d;
      const double* w1 = params.mlp.w1.values.data() + j * 2 * d;
      for (std::size_t c = 0; c < 2 * d; ++c) {
        gw1[c] += da * concat[c];
        dconcat[c] += da * w1[c];
      }
    }
    double* du = dh.values.data() + static_cast<std::size_t>(key.user) * d;
    double* di = dh.values.data() + static_cast<std::size_t>(g.item_node(key.item)) * d;
    for (std::size_t c = 0; c < d; ++c) {
      du[c] += dconcat[c];
      di[c] += dconcat[d + c];
    }
  }

  const DenseMatrix dmask = propagate_backward(adj, params.mask_layers, dh);
  grad.mask_embedding.add_scaled(dmask, 1.0);
}

double score_pair(const BipartiteGraph& g, const DenseMatrix& h_mask,
                  const ParameterSet& params, std::uint32_t user, std::uint32_t item) {
  const std::size_t d = params.dim;
  const auto hu = h_mask.row(user);
  const auto hi = h_mask.row(g.item_node(item));
  double pre = params.mlp.b2;
  for (std::size_t j = 0; j < params.mlp.hidden(); ++j) {
    double a = params.mlp.b1[j];
    const double* w = params.mlp.w1.values.data() + j * 2 * d;
    for (std::size_t c = 0; c < d; ++c) a += w[c] * hu[c] + w[d + c] * hi[c];
    pre += params.mlp.w2[j] * std::tanh(a);
  }
  return std::clamp(sigmoid(pre), kScoreLo, kScoreHi);
}

Decomposition decompose(const BipartiteGraph& g, const EdgeScores& scores, double tau) {
  if (tau <= 0.0 || tau > 1.0)
    throw std::invalid_argument("decompose: tau must be in (0, 1]");
  const std::size_t ne = scores.edges.size();
  if (ne == 0) throw std::invalid_argument("decompose: empty edge set");
  if (scores.edges.size() != g.edges.size())
    throw std::invalid_argument("decompose: scores do not cover the edge set");

  std::vector<std::size_t> order(ne);
  for (std::size_t i = 0; i < ne; ++i) order[i] = i;
  // Highest score first; ties by (user, item).
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores.values[a] != scores.values[b]) return scores.values[a] > scores.values[b];
    return scores.edges[a] < scores.edges[b];
  });

  const auto keep = static_cast<std::size_t>(
      std::ceil(tau * static_cast<double>(ne)));
  Decomposition dec;
  dec.tau = tau;
  dec.invariant_edges.reserve(keep);
  dec.variant_edges.reserve(ne - keep);
  for (std::size_t i = 0; i < ne; ++i)
    (i < keep ? dec.invariant_edges : dec.variant_edges).push_back(scores.edges[order[i]]);
  std::sort(dec.invariant_edges.begin(), dec.invariant_edges.end());
  std::sort(dec.variant_edges.begin(), dec.variant_edges.end());
  return dec;
}

VariantEmbeddings variant_embeddings(const BipartiteGraph& g,
                                     std::span<const EdgeKey> variant,
                                     const ParameterSet& params) {
  if (variant.empty())
    throw std::invalid_argument("variant_embeddings: variant set is empty");
  const SparseMatrix adj = normalize_adjacency(g.num_users, g.num_items, variant);
  const DenseMatrix h = propagate(adj, params.embedding, params.layers);
  VariantEmbeddings out;
  out.edges.assign(variant.begin(), variant.end());
  const std::size_t d = params.dim;
  out.z = DenseMatrix(variant.size(), 2 * d);
  for (std::size_t e = 0; e < variant.size(); ++e) {
    const auto hu = h.row(variant[e].user);
    const auto hi = h.row(g.item_node(variant[e].item));
    std::copy(hu.begin(), hu.end(), out.z.row(e).begin());
    std::copy(hi.begin(), hi.end(), out.z.row(e).begin() + static_cast<std::ptrdiff_t>(d));
  }
  return out;
}

EnvironmentPartition infer_environments(const BipartiteGraph& g,
                                        const Decomposition& dec,
                                        const ParameterSet& params, std::size_t k,
                                        std::uint64_t seed) {
  EnvironmentPartition part;
  if (dec.variant_edges.empty()) {
    // Single-environment fallback: nothing variant to cluster.
    part.k = 1;
    return part;
  }
  const VariantEmbeddings ve = variant_embeddings(g, dec.variant_edges, params);
  const KMeansResult km = kmeans(ve.z, k, seed);
  part.k = km.k;
  part.edges = ve.edges;
  part.assignment = km.assignment;
  part.centroids = km.centroids;
  part.k_reduced = km.k_reduced;
  return part;
}

}  // namespace invgcllm
