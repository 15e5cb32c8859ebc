#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "invgcllm/bpr.hpp"
#include "invgcllm/env_extractor.hpp"
#include "invgcllm/graph.hpp"
#include "invgcllm/params.hpp"

namespace invgcllm {

struct Stage1Config {
  double alpha = 0.1;          // gradient-variance weight
  double beta = 1.0;           // score-regularization weight
  int epochs = 100;            // j
  double learning_rate = 1e-4;
  double tau = 0.7;
  std::size_t environments = 4;  // K
  int refresh_every = 0;         // re-infer environments every R epochs, 0 = off
  std::uint64_t seed = 0;
};

struct EnvironmentRisk {
  int env = 0;
  double risk = 0.0;
  Gradient gradient;  // stage-1 flat ordering
};

// (1/K) * sum_e ||g_e - mean(g)||^2, coordinate-wise mean.
double grad_variance(std::span<const EnvironmentRisk> risks);

// -(1/n) sum [ s log p + (1-s) log(1-p) ] with p clamped to
// [1e-7, 1 - 1e-7]; the pointwise form of the score regularizer.
double score_loss_value(std::span<const double> scores, std::span<const double> probs);

// The stage-1 objective with the Top-tau selection, environment labels and
// negative samples frozen at construction:
//   mean_e(R^e) + alpha * Var_e(grad R^e) + beta * L_score
// R^e is the mean BPR loss over (invariant ∪ env-e variant) positives with
// embeddings from propagating the mask table over the invariant subgraph.
// L_score is a cross-entropy pulling scores S toward the link probabilities
// P(u,i) = sigmoid(h_u·h_i) predicted from the same invariant-subgraph
// embeddings, summed over every observed edge.
class Stage1Objective {
 public:
  Stage1Objective(const BipartiteGraph& g, const SparseMatrix& adj_full,
                  Decomposition dec, const EnvironmentPartition& envs,
                  const Stage1Config& cfg);

  double evaluate(const ParameterSet& params) const;

  struct Eval {
    double objective = 0.0;
    double mean_risk = 0.0;
    double penalty = 0.0;     // Var_e of the risk gradients (unweighted)
    double score_loss = 0.0;  // unweighted
    std::vector<double> gradient;  // stage-1 flat
    std::vector<EnvironmentRisk> risks;
  };
  Eval evaluate_with_gradient(const ParameterSet& params) const;

  EnvironmentRisk env_risk(int env, const ParameterSet& params) const;

  // The score-regularization term alone (value and stage-1 gradient).
  struct ScoreTerm {
    double value = 0.0;
    std::vector<double> gradient;
  };
  ScoreTerm score_term(const ParameterSet& params) const;

  std::size_t num_envs() const { return triples_.size(); }
  std::size_t skipped_envs() const { return skipped_envs_; }
  std::span<const BprTriple> env_triples(int env) const { return triples_[env]; }
  const Decomposition& decomposition() const { return dec_; }

 private:
  struct Risks;
  Risks compute_risks(const ParameterSet& params) const;

  const BipartiteGraph& g_;
  const SparseMatrix& adj_full_;
  Decomposition dec_;
  SparseMatrix adj_inv_;                        // invariant-subgraph adjacency
  std::vector<std::vector<BprTriple>> triples_;  // per included environment
  std::size_t skipped_envs_ = 0;
  Stage1Config cfg_;
};

struct Stage1LogRow {
  int epoch = 0;
  double objective = 0.0;
  double mean_risk = 0.0;
  double penalty = 0.0;
  double score_loss = 0.0;
};

struct Stage1Result {
  ParameterSet params;
  EdgeScores scores;  // final soft mask S
  EnvironmentPartition environments;
  std::vector<Stage1LogRow> log;
};

// Algorithm: infer environments once, then `epochs` full-batch gradient
// steps on the invariant objective; the Top-tau selection is recomputed at
// each epoch start and held constant through the step.
Stage1Result train_scores(const BipartiteGraph& g, ParameterSet params,
                          const Stage1Config& cfg);

}  // namespace invgcllm
