#include "invgcllm/cicl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace invgcllm {

double cicl_anchor_loss(double pos_sim, std::span<const double> negative_sims,
                        bool with_self_negative, double self_sim, double temperature) {
  if (temperature <= 0.0)
    throw std::invalid_argument("cicl: temperature must be > 0");
  double mx = pos_sim;
  for (double s : negative_sims) mx = std::max(mx, s);
  if (with_self_negative) mx = std::max(mx, self_sim);
  double z = std::exp((pos_sim - mx) / temperature);
  for (double s : negative_sims) z += std::exp((s - mx) / temperature);
  if (with_self_negative) z += std::exp((self_sim - mx) / temperature);
  // -log( exp(pos/t) / Z )
  return std::log(z) - (pos_sim - mx) / temperature;
}

CiclResult cicl_loss(const ViewEmbeddings& views, std::span<const std::uint32_t> anchors,
                     std::span<const std::uint32_t> spurious_degree, double temperature) {
  if (temperature <= 0.0)
    throw std::invalid_argument("cicl_loss: temperature must be > 0");
  const DenseMatrix& h = views.main;
  if (!h.same_shape(views.causal) || !h.same_shape(views.spurious))
    throw std::invalid_argument("cicl_loss: view shapes disagree");
  if (spurious_degree.size() != h.rows)
    throw std::invalid_argument("cicl_loss: spurious_degree length mismatch");
  {
    std::set<std::uint32_t> uniq(anchors.begin(), anchors.end());
    if (uniq.size() != anchors.size())
      throw std::invalid_argument("cicl_loss: anchors must be distinct");
  }

  CiclResult res;
  res.grad_main = DenseMatrix(h.rows, h.cols);
  res.grad_causal = DenseMatrix(h.rows, h.cols);
  res.grad_spurious = DenseMatrix(h.rows, h.cols);

  const double inv_t = 1.0 / temperature;
  std::vector<double> neg_sims(anchors.size());

  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const std::uint32_t u = anchors[a];
    const bool self_neg = spurious_degree[u] > 0;

    const double pos = cosine_sim(h.row(u), views.causal.row(u));
    double self_sim = 0.0;
    if (self_neg) self_sim = cosine_sim(h.row(u), views.spurious.row(u));
    std::size_t nn = 0;
    for (std::size_t b = 0; b < anchors.size(); ++b) {
      if (b == a) continue;
      neg_sims[nn++] = cosine_sim(h.row(u), h.row(anchors[b]));
    }

    // Stabilized softmax over {pos, negatives, self}.
    double mx = pos;
    for (std::size_t i = 0; i < nn; ++i) mx = std::max(mx, neg_sims[i]);
    if (self_neg) mx = std::max(mx, self_sim);
    const double e_pos = std::exp((pos - mx) * inv_t);
    double z = e_pos;
    for (std::size_t i = 0; i < nn; ++i) z += std::exp((neg_sims[i] - mx) * inv_t);
    const double e_self = self_neg ? std::exp((self_sim - mx) * inv_t) : 0.0;
    z += e_self;

    res.loss += std::log(z) - (pos - mx) * inv_t;

    // d loss / d sim: (p - 1)/t for the positive, p/t for each negative.
    const double c_pos = (e_pos / z - 1.0) * inv_t;
    cosine_sim_backward(h.row(u), views.causal.row(u), c_pos, res.grad_main.row(u),
                        res.grad_causal.row(u));
    nn = 0;
    for (std::size_t b = 0; b < anchors.size(); ++b) {
      if (b == a) continue;
      const double p = std::exp((neg_sims[nn] - mx) * inv_t) / z;
      cosine_sim_backward(h.row(u), h.row(anchors[b]), p * inv_t, res.grad_main.row(u),
                          res.grad_main.row(anchors[b]));
      ++nn;
    }
    if (self_neg) {
      cosine_sim_backward(h.row(u), views.spurious.row(u), (e_self / z) * inv_t,
                          res.grad_main.row(u), res.grad_spurious.row(u));
    }
  }
  return res;
}

BprResult bpr_loss(const DenseMatrix& h_main, std::span<const BprTriple> triples) {
  return bpr_loss_grad(h_main, triples, /*average=*/false);
}

double total_loss(double cicl, double bpr, double lambda) {
  if (!std::isfinite(cicl) || !std::isfinite(bpr))
    throw std::invalid_argument("total_loss: non-finite component");
  return cicl + lambda * bpr;
}

TrainResult train(const BipartiteGraph& g, const GraphViews& views, ParameterSet params,
                  const TrainConfig& cfg,
                  const std::function<void(int, const ParameterSet&)>& on_epoch) {
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.lambda < 0.0) throw std::invalid_argument("train: lambda must be >= 0");
  if (cfg.temperature <= 0.0)
    throw std::invalid_argument("train: temperature must be > 0");
  if (cfg.batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");

  const SparseMatrix adj = normalize_adjacency(g);
  const SparseMatrix adj_c =
      normalize_adjacency(g.num_users, g.num_items, views.causal_edges);
  const SparseMatrix adj_s =
      normalize_adjacency(g.num_users, g.num_items, views.spurious_edges);

  std::vector<std::uint32_t> sdeg(g.num_nodes(), 0);
  for (const EdgeKey& e : views.spurious_edges) {
    ++sdeg[e.user];
    ++sdeg[g.item_node(e.item)];
  }

  const std::size_t ne = g.edges.size();
  TrainResult out;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(mix_seed(cfg.seed, 0xe90c0000ULL + static_cast<std::uint64_t>(epoch)));

    std::vector<std::size_t> perm(ne);
    for (std::size_t i = 0; i < ne; ++i) perm[i] = i;
    for (std::size_t i = 0; i + 1 < ne; ++i) {
      const std::size_t j = i + rng.uniform_index(ne - i);
      std::swap(perm[i], perm[j]);
    }

    double epoch_cicl = 0.0, epoch_bpr = 0.0, epoch_total = 0.0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < ne; start += cfg.batch_size) {
      const std::size_t end = std::min(ne, start + cfg.batch_size);

      std::vector<BprTriple> triples;
      std::set<std::uint32_t> anchor_set;
      for (std::size_t i = start; i < end; ++i) {
        const Edge& e = g.edges[perm[i]];
        anchor_set.insert(e.user);
        anchor_set.insert(g.item_node(e.item));
        const auto neg = sample_negative(g, e.user, rng);
        if (!neg) continue;  // user has interacted with every item
        triples.push_back({e.user, g.item_node(e.item), g.item_node(*neg)});
      }
      std::vector<std::uint32_t> anchors(anchor_set.begin(), anchor_set.end());

      double bpr_value = 0.0, cicl_value = 0.0;
      DenseMatrix grad_x;
      if (cfg.bpr_only) {
        const DenseMatrix h = propagate(adj, params.embedding, params.layers);
        const BprResult bpr = bpr_loss(h, triples);
        bpr_value = bpr.loss;
        grad_x = propagate_backward(adj, params.layers, bpr.grad_h);
      } else {
        const ViewEmbeddings emb =
            encode_views(adj, adj_c, adj_s, params.embedding, params.layers);
        const CiclResult cicl = cicl_loss(emb, anchors, sdeg, cfg.temperature);
        const BprResult bpr = bpr_loss(emb.main, triples);
        cicl_value = cicl.loss;
        bpr_value = bpr.loss;
        DenseMatrix g_main = cicl.grad_main;
        g_main.add_scaled(bpr.grad_h, cfg.lambda);
        grad_x = propagate_backward(adj, params.layers, g_main);
        grad_x.add_scaled(propagate_backward(adj_c, params.layers, cicl.grad_causal), 1.0);
        grad_x.add_scaled(propagate_backward(adj_s, params.layers, cicl.grad_spurious), 1.0);
      }
      const double step_total = cfg.bpr_only
                                    ? bpr_value
                                    : total_loss(cicl_value, bpr_value, cfg.lambda);
      if (!std::isfinite(step_total))
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                 " step " + std::to_string(batches) +
                                 "; restore from the last epoch checkpoint");

      params.embedding.add_scaled(grad_x, -cfg.learning_rate);
      epoch_cicl += cicl_value;
      epoch_bpr += bpr_value;
      epoch_total += step_total;
      ++batches;
    }

    const auto t1 = std::chrono::steady_clock::now();
    TrainEpochLog row;
    row.epoch = epoch;
    const double nb = batches == 0 ? 1.0 : static_cast<double>(batches);
    row.cicl = epoch_cicl / nb;
    row.bpr = epoch_bpr / nb;
    row.total = epoch_total / nb;
    row.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    out.log.push_back(row);
    if (on_epoch) on_epoch(epoch, params);
  }
  out.params = std::move(params);
  return out;
}

}  // namespace invgcllm
