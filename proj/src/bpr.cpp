#include "invgcllm/bpr.hpp"

#include <cmath>
#include <stdexcept>

namespace invgcllm {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_neg(double margin) {
  // ln(1 + e^{-m}) = -ln sigma(m)
  if (margin > 0.0) return std::log1p(std::exp(-margin));
  return -margin + std::log1p(std::exp(margin));
}

BprResult bpr_loss_grad(const DenseMatrix& h, std::span<const BprTriple> triples,
                        bool average) {
  BprResult r;
  r.grad_h = DenseMatrix(h.rows, h.cols);
  if (triples.empty()) return r;
  const double w = average ? 1.0 / static_cast<double>(triples.size()) : 1.0;
  const std::size_t d = h.cols;
  for (const BprTriple& t : triples) {
    const double* hu = h.values.data() + static_cast<std::size_t>(t.user_node) * d;
    const double* hi = h.values.data() + static_cast<std::size_t>(t.pos_node) * d;
    const double* hj = h.values.data() + static_cast<std::size_t>(t.neg_node) * d;
    double m = 0.0;
    for (std::size_t c = 0; c < d; ++c) m += hu[c] * (hi[c] - hj[c]);
    r.loss += w * softplus_neg(m);
    // d/dm of -ln sigma(m) is sigma(m) - 1
    const double coef = w * (sigmoid(m) - 1.0);
    double* gu = r.grad_h.values.data() + static_cast<std::size_t>(t.user_node) * d;
    double* gi = r.grad_h.values.data() + static_cast<std::size_t>(t.pos_node) * d;
    double* gj = r.grad_h.values.data() + static_cast<std::size_t>(t.neg_node) * d;
    for (std::size_t c = 0; c < d; ++c) {
      gu[c] += coef * (hi[c] - hj[c]);
      gi[c] += coef * hu[c];
      gj[c] -= coef * hu[c];
    }
  }
  return r;
}

BprTangentResult bpr_grad_tangent(const DenseMatrix& h, const DenseMatrix& dh,
                                  std::span<const BprTriple> triples, bool average) {
  if (!h.same_shape(dh)) throw std::invalid_argument("bpr_grad_tangent: shape mismatch");
  BprTangentResult r;
  r.dgrad_h = DenseMatrix(h.rows, h.cols);
  if (triples.empty()) return r;
  const double w = average ? 1.0 / static_cast<double>(triples.size()) : 1.0;
  const std::size_t d = h.cols;
  for (const BprTriple& t : triples) {
    const std::size_t ou = static_cast<std::size_t>(t.user_node) * d;
    const std::size_t oi = static_cast<std::size_t>(t.pos_node) * d;
    const std::size_t oj = static_cast<std::size_t>(t.neg_node) * d;
    const double* hu = h.values.data() + ou;
    const double* hi = h.values.data() + oi;
    const double* hj = h.values.data() + oj;
    const double* du = dh.values.data() + ou;
    const double* di = dh.values.data() + oi;
    const double* dj = dh.values.data() + oj;
    double m = 0.0, dm = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      m += hu[c] * (hi[c] - hj[c]);
      dm += du[c] * (hi[c] - hj[c]) + hu[c] * (di[c] - dj[c]);
    }
    const double s = sigmoid(m);
    const double coef = w * (s - 1.0);
    const double dcoef = w * s * (1.0 - s) * dm;
    r.dloss += coef * dm;  // d loss = (sigma(m)-1) dm, already weighted
    double* gu = r.dgrad_h.values.data() + ou;
    double* gi = r.dgrad_h.values.data() + oi;
    double* gj = r.dgrad_h.values.data() + oj;
    for (std::size_t c = 0; c < d; ++c) {
      gu[c] += dcoef * (hi[c] - hj[c]) + coef * (di[c] - dj[c]);
      gi[c] += dcoef * hu[c] + coef * du[c];
      gj[c] -= dcoef * hu[c] + coef * du[c];
    }
  }
  return r;
}

std::optional<std::uint32_t> sample_negative(const BipartiteGraph& g, std::uint32_t user,
                                             Rng& rng) {
  const std::size_t interacted = g.items_of_user[user].size();
  if (interacted >= g.num_items) return std::nullopt;
  while (true) {
    const auto item = static_cast<std::uint32_t>(rng.uniform_index(g.num_items));
    if (!g.has_edge(user, item)) return item;
  }
}

}  // namespace invgcllm
