#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "invgcllm/bpr.hpp"
#include "invgcllm/encoder.hpp"
#include "invgcllm/graph.hpp"
#include "invgcllm/llm_edit.hpp"
#include "invgcllm/params.hpp"

namespace invgcllm {

struct CiclResult {
  double loss = 0.0;
  DenseMatrix grad_main;
  DenseMatrix grad_causal;
  DenseMatrix grad_spurious;
};

// InfoNCE-style contrast: the positive pair is (main, causal) per anchor,
// negatives are the in-batch main embeddings plus the anchor's own spurious
// embedding. The self-negative is omitted for anchors with zero degree in
// the spurious view. Anchors must be distinct node indices.
CiclResult cicl_loss(const ViewEmbeddings& views, std::span<const std::uint32_t> anchors,
                     std::span<const std::uint32_t> spurious_degree, double temperature);

// Per-anchor loss from raw similarities; exposed for direct checks of the
// formula (e.g. monotonicity in the positive similarity).
double cicl_anchor_loss(double pos_sim, std::span<const double> negative_sims,
                        bool with_self_negative, double self_sim, double temperature);

// -sum ln sigma(h_u·h_i - h_u·h_j) over main-view embeddings (sum, not mean).
BprResult bpr_loss(const DenseMatrix& h_main, std::span<const BprTriple> triples);

// L_total = L_CICL + lambda * L_BPR.
double total_loss(double cicl, double bpr, double lambda);

struct TrainConfig {
  double lambda = 0.05;
  double temperature = 0.2;
  std::size_t batch_size = 256;
  int epochs = 100;  // k
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  bool bpr_only = false;  // backbone ablation: drop the contrastive term
};

struct TrainEpochLog {
  int epoch = 0;
  double cicl = 0.0;
  double bpr = 0.0;
  double total = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  ParameterSet params;
  std::vector<TrainEpochLog> log;
};

// Stage-3 loop: per batch, encode the three views, combine the contrastive
// and ranking gradients through the shared embedding table, and take a
// deterministic gradient step. `on_epoch` runs after each epoch (used for
// checkpointing).
TrainResult train(const BipartiteGraph& g, const GraphViews& views, ParameterSet params,
                  const TrainConfig& cfg,
                  const std::function<void(int, const ParameterSet&)>& on_epoch = {});

}  // namespace invgcllm
