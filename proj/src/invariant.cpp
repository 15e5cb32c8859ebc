#include "invgcllm/invariant.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace invgcllm {

namespace {
constexpr double kProbLo = 1e-7;
constexpr double kProbHi = 1.0 - 1e-7;
}  // namespace

double grad_variance(std::span<const EnvironmentRisk> risks) {
  if (risks.empty()) throw std::invalid_argument("grad_variance: no environments");
  const std::size_t n = risks[0].gradient.size();
  for (const auto& r : risks)
    if (r.gradient.size() != n)
      throw std::invalid_argument("grad_variance: mismatched gradient lengths");
  std::vector<double> mean(n, 0.0);
  for (const auto& r : risks)
    for (std::size_t i = 0; i < n; ++i) mean[i] += r.gradient[i];
  for (double& m : mean) m /= static_cast<double>(risks.size());
  double v = 0.0;
  for (const auto& r : risks) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = r.gradient[i] - mean[i];
      v += d * d;
    }
  }
  return v / static_cast<double>(risks.size());
}

Stage1Objective::Stage1Objective(const BipartiteGraph& g, const SparseMatrix& adj_full,
                                 Decomposition dec, const EnvironmentPartition& envs,
                                 const Stage1Config& cfg)
    : g_(g), adj_full_(adj_full), dec_(std::move(dec)), cfg_(cfg) {
  adj_inv_ = normalize_adjacency(g.num_users, g.num_items, dec_.invariant_edges);

  // Environment labels were assigned to the initial variant set; an edge
  // currently variant but unlabeled belongs to no environment this epoch.
  std::map<EdgeKey, int> label;
  for (std::size_t i = 0; i < envs.edges.size(); ++i)
    label[envs.edges[i]] = envs.assignment[i];

  const std::size_t k = envs.k == 0 ? 1 : envs.k;
  std::vector<std::vector<EdgeKey>> positives(k);
  for (std::size_t e = 0; e < k; ++e)
    positives[e] = dec_.invariant_edges;  // invariant edges join every environment
  for (const EdgeKey& ek : dec_.variant_edges) {
    const auto it = label.find(ek);
    if (it != label.end()) positives[static_cast<std::size_t>(it->second)].push_back(ek);
  }

  for (std::size_t e = 0; e < k; ++e) {
    auto& pos = positives[e];
    if (pos.empty()) {
      ++skipped_envs_;
      continue;
    }
    std::sort(pos.begin(), pos.end());
    // Seed the negatives from the positive set's content, so environments
    // with identical edges draw identical negatives.
    std::uint64_t content = 0xcbf29ce484222325ULL;
    for (const EdgeKey& ek : pos)
      content = mix_seed(content, (static_cast<std::uint64_t>(ek.user) << 32) | ek.item);
    Rng rng(mix_seed(cfg.seed, content));
    std::vector<BprTriple> ts;
    ts.reserve(pos.size());
    for (const EdgeKey& ek : pos) {
      const auto neg = sample_negative(g, ek.user, rng);
      if (!neg) continue;  // user saturates the catalog; no ranking signal
      ts.push_back({ek.user, g.item_node(ek.item), g.item_node(*neg)});
    }
    if (ts.empty()) {
      ++skipped_envs_;
      continue;
    }
    triples_.push_back(std::move(ts));
  }
  if (triples_.empty())
    throw std::runtime_error("stage-1: every environment is empty");
}

struct Stage1Objective::Risks {
  DenseMatrix h_inv;  // invariant-subgraph embeddings of the mask table
  std::vector<EnvironmentRisk> risks;
};

double score_loss_value(std::span<const double> scores, std::span<const double> probs) {
  if (scores.size() != probs.size() || scores.empty())
    throw std::invalid_argument("score_loss_value: length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::clamp(probs[i], kProbLo, kProbHi);
    loss -= scores[i] * std::log(p) + (1.0 - scores[i]) * std::log(1.0 - p);
  }
  return loss / static_cast<double>(scores.size());
}

Stage1Objective::Risks Stage1Objective::compute_risks(const ParameterSet& params) const {
  Risks out;
  out.h_inv = propagate(adj_inv_, params.mask_embedding, params.mask_layers);
  out.risks.reserve(triples_.size());
  for (std::size_t e = 0; e < triples_.size(); ++e) {
    const BprResult r = bpr_loss_grad(out.h_inv, triples_[e], /*average=*/true);
    MaskModelGrad grad = MaskModelGrad::zeros_like(params);
    grad.mask_embedding =
        propagate_backward(adj_inv_, params.mask_layers, r.grad_h);
    EnvironmentRisk er;
    er.env = static_cast<int>(e);
    er.risk = r.loss;
    er.gradient = grad.flatten();
    out.risks.push_back(std::move(er));
  }
  return out;
}

EnvironmentRisk Stage1Objective::env_risk(int env, const ParameterSet& params) const {
  if (env < 0 || static_cast<std::size_t>(env) >= triples_.size())
    throw std::invalid_argument("env_risk: no such environment");
  const DenseMatrix h = propagate(adj_inv_, params.mask_embedding, params.mask_layers);
  const BprResult r = bpr_loss_grad(h, triples_[static_cast<std::size_t>(env)], true);
  MaskModelGrad grad = MaskModelGrad::zeros_like(params);
  grad.mask_embedding = propagate_backward(adj_inv_, params.mask_layers, r.grad_h);
  EnvironmentRisk er;
  er.env = env;
  er.risk = r.loss;
  er.gradient = grad.flatten();
  return er;
}

namespace {

// Score-regularization term and its two gradient paths. P is derived from
// the invariant-subgraph embeddings, S from the full-graph score model.
struct ScoreLossParts {
  double value = 0.0;
  std::vector<double> dscore;  // dL/dS per edge
  DenseMatrix dh_inv;          // dL/dH_inv
};

ScoreLossParts score_loss_parts(const BipartiteGraph& g, const EdgeScores& s,
                                const DenseMatrix& h_inv) {
  const std::size_t ne = s.edges.size();
  const std::size_t d = h_inv.cols;
  ScoreLossParts out;
  out.dscore.assign(ne, 0.0);
  out.dh_inv = DenseMatrix(h_inv.rows, h_inv.cols);
  const double w = 1.0 / static_cast<double>(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const EdgeKey key = s.edges[e];
    const auto hu = h_inv.row(key.user);
    const auto hi = h_inv.row(g.item_node(key.item));
    const double raw = sigmoid(dot(hu, hi));
    const bool clamped = raw < kProbLo || raw > kProbHi;
    const double p = std::clamp(raw, kProbLo, kProbHi);
    const double sv = s.values[e];
    out.value -= w * (sv * std::log(p) + (1.0 - sv) * std::log(1.0 - p));
    out.dscore[e] = -w * (std::log(p) - std::log(1.0 - p));
    if (!clamped) {
      const double dp = -w * (sv / p - (1.0 - sv) / (1.0 - p));
      const double ddot = dp * raw * (1.0 - raw);
      double* gu = out.dh_inv.values.data() + static_cast<std::size_t>(key.user) * d;
      double* gi =
          out.dh_inv.values.data() + static_cast<std::size_t>(g.item_node(key.item)) * d;
      for (std::size_t c = 0; c < d; ++c) {
        gu[c] += ddot * hi[c];
        gi[c] += ddot * hu[c];
      }
    }
  }
  return out;
}

}  // namespace

Stage1Objective::ScoreTerm Stage1Objective::score_term(const ParameterSet& params) const {
  const DenseMatrix h_inv =
      propagate(adj_inv_, params.mask_embedding, params.mask_layers);
  EdgeScoreCache cache;
  const EdgeScores s = score_edges(g_, adj_full_, params, &cache);
  const ScoreLossParts sl = score_loss_parts(g_, s, h_inv);
  MaskModelGrad grad = MaskModelGrad::zeros_like(params);
  score_edges_backward(g_, adj_full_, params, cache, sl.dscore, grad);
  grad.mask_embedding.add_scaled(
      propagate_backward(adj_inv_, params.mask_layers, sl.dh_inv), 1.0);
  return {sl.value, grad.flatten()};
}

double Stage1Objective::evaluate(const ParameterSet& params) const {
  const Risks rs = compute_risks(params);
  double mean_risk = 0.0;
  for (const auto& r : rs.risks) mean_risk += r.risk;
  mean_risk /= static_cast<double>(rs.risks.size());
  const double penalty = grad_variance(rs.risks);
  const EdgeScores s = score_edges(g_, adj_full_, params);
  const ScoreLossParts sl = score_loss_parts(g_, s, rs.h_inv);
  return mean_risk + cfg_.alpha * penalty + cfg_.beta * sl.value;
}

Stage1Objective::Eval Stage1Objective::evaluate_with_gradient(
    const ParameterSet& params) const {
  Eval ev;
  const Risks rs = compute_risks(params);
  const std::size_t k = rs.risks.size();
  const std::size_t n = rs.risks[0].gradient.size();

  for (const auto& r : rs.risks) ev.mean_risk += r.risk;
  ev.mean_risk /= static_cast<double>(k);
  ev.penalty = grad_variance(rs.risks);

  std::vector<double> mean_grad(n, 0.0);
  for (const auto& r : rs.risks)
    for (std::size_t i = 0; i < n; ++i) mean_grad[i] += r.gradient[i];
  for (double& v : mean_grad) v /= static_cast<double>(k);

  // Gradient of the mean risk.
  ev.gradient = mean_grad;

  // Gradient of the variance penalty: (2/K) * sum_e Hess(R^e) (g_e - mean).
  // The risks depend on the mask table only, so the Hessian-vector product
  // is a forward-over-reverse pass through the propagation.
  const std::size_t mask_count = params.mask_embedding.values.size();
  for (std::size_t e = 0; e < k; ++e) {
    DenseMatrix v(params.mask_embedding.rows, params.mask_embedding.cols);
    for (std::size_t i = 0; i < mask_count; ++i)
      v.values[i] = rs.risks[e].gradient[i] - mean_grad[i];
    const DenseMatrix dh = propagate(adj_inv_, v, params.mask_layers);
    const BprTangentResult tr = bpr_grad_tangent(rs.h_inv, dh, triples_[e], true);
    const DenseMatrix hvp = propagate_backward(adj_inv_, params.mask_layers, tr.dgrad_h);
    const double scale = cfg_.alpha * 2.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < mask_count; ++i)
      ev.gradient[i] += scale * hvp.values[i];
  }

  // Score regularization: gradient through S (score model) and through P
  // (invariant-subgraph embeddings).
  EdgeScoreCache cache;
  const EdgeScores s = score_edges(g_, adj_full_, params, &cache);
  const ScoreLossParts sl = score_loss_parts(g_, s, rs.h_inv);
  ev.score_loss = sl.value;

  MaskModelGrad sgrad = MaskModelGrad::zeros_like(params);
  score_edges_backward(g_, adj_full_, params, cache, sl.dscore, sgrad);
  sgrad.mask_embedding.add_scaled(
      propagate_backward(adj_inv_, params.mask_layers, sl.dh_inv), 1.0);
  const std::vector<double> sflat = sgrad.flatten();
  for (std::size_t i = 0; i < n; ++i) ev.gradient[i] += cfg_.beta * sflat[i];

  ev.objective = ev.mean_risk + cfg_.alpha * ev.penalty + cfg_.beta * ev.score_loss;
  ev.risks = rs.risks;
  return ev;
}

Stage1Result train_scores(const BipartiteGraph& g, ParameterSet params,
                          const Stage1Config& cfg) {
  if (cfg.epochs < 1)
    throw std::invalid_argument("train_scores: epochs must be >= 1");
  if (cfg.alpha < 0 || cfg.beta < 0 || !std::isfinite(cfg.alpha) ||
      !std::isfinite(cfg.beta))
    throw std::invalid_argument("train_scores: alpha/beta must be finite and >= 0");

  const SparseMatrix adj_full = normalize_adjacency(g);

  EdgeScores scores = score_edges(g, adj_full, params);
  Decomposition dec = decompose(g, scores, cfg.tau);
  EnvironmentPartition envs =
      infer_environments(g, dec, params, cfg.environments, mix_seed(cfg.seed, 7));

  Stage1Result out;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch > 0) {
      scores = score_edges(g, adj_full, params);
      dec = decompose(g, scores, cfg.tau);
      if (cfg.refresh_every > 0 && epoch % cfg.refresh_every == 0)
        envs = infer_environments(g, dec, params, cfg.environments,
                                  mix_seed(cfg.seed, 7 + static_cast<std::uint64_t>(epoch)));
    }
    const Stage1Objective objective(g, adj_full, dec, envs, cfg);
    const auto ev = objective.evaluate_with_gradient(params);
    if (!std::isfinite(ev.objective))
      throw std::runtime_error("stage-1 objective diverged at epoch " +
                               std::to_string(epoch));
    std::vector<double> flat = params.stage1_flatten();
    for (std::size_t i = 0; i < flat.size(); ++i)
      flat[i] -= cfg.learning_rate * ev.gradient[i];
    params.stage1_unflatten(flat);
    if (!params.all_finite())
      throw std::runtime_error("stage-1 parameters diverged at epoch " +
                               std::to_string(epoch));
    out.log.push_back({epoch, ev.objective, ev.mean_risk, ev.penalty, ev.score_loss});
  }

  out.scores = score_edges(g, adj_full, params);
  out.environments = std::move(envs);
  out.params = std::move(params);
  return out;
}

}  // namespace invgcllm
