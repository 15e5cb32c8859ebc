#include "invgcllm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "invgcllm/cicl.hpp"
#include "invgcllm/eval.hpp"
#include "invgcllm/invariant.hpp"
#include "invgcllm/llm_edit.hpp"

namespace invgcllm {

namespace fs = std::filesystem;

namespace {

std::string path_in(const PipelineConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void record_stage(const PipelineConfig& cfg, const std::string& stage) {
  write_text(path_in(cfg, stage + ".hash"), cfg.hash() + "\n");
}

bool stage_current(const PipelineConfig& cfg, const std::string& stage) {
  return read_text(path_in(cfg, stage + ".hash")) == cfg.hash() + "\n";
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<Interaction> filter_min_rating(std::vector<Interaction> xs, double min_rating) {
  if (min_rating <= 0.0) return xs;
  std::vector<Interaction> out;
  out.reserve(xs.size());
  for (const Interaction& x : xs)
    if (x.rating >= min_rating) out.push_back(x);
  return out;
}

struct PipelineData {
  std::vector<Interaction> train;
  std::vector<Interaction> test;
  BipartiteGraph graph;  // edges from train; node space covers train and test
};

// The node space is fixed across all stages: train ids first (first
// appearance order), then test-only ids. Cold-start rows keep their
// initialized embeddings.
PipelineData load_pipeline_data(const PipelineConfig& cfg) {
  PipelineData d;
  d.train = ingest_interactions(path_in(cfg, "train.tsv"), InteractionFormat::Tsv);
  d.test = ingest_interactions(path_in(cfg, "test.tsv"), InteractionFormat::Tsv);
  d.graph = build_graph(d.train);
  extend_node_space(d.graph, d.test);
  return d;
}

ParameterSet initial_params(const PipelineConfig& cfg, const BipartiteGraph& g) {
  return ParameterSet::init(g.num_nodes(), cfg.dim, cfg.layers, cfg.mask_layers,
                            cfg.mlp_hidden, cfg.seed);
}

void write_edge_list(const std::string& path, const BipartiteGraph& g,
                     std::span<const EdgeKey> edges) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const EdgeKey& e : edges)
    out << g.user_ids[e.user] << '\t' << g.item_ids[e.item] << '\n';
}

std::vector<EdgeKey> read_edge_list(const std::string& path, const BipartiteGraph& g) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);
  std::vector<EdgeKey> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::int64_t u, i;
    if (!(row >> u >> i)) throw ParseError(path, line_no, "expected 'user item'");
    const auto uit = g.user_index.find(u);
    const auto iit = g.item_index.find(i);
    if (uit == g.user_index.end() || iit == g.item_index.end())
      throw ParseError(path, line_no, "edge references an unknown id");
    edges.push_back({uit->second, iit->second});
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

EdgeScores read_scores(const std::string& path, const BipartiteGraph& g) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scores: " + path);
  std::vector<std::pair<EdgeKey, double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::int64_t u, i;
    double s;
    if (!(row >> u >> i >> s)) throw ParseError(path, line_no, "expected 'user item score'");
    const auto uit = g.user_index.find(u);
    const auto iit = g.item_index.find(i);
    if (uit == g.user_index.end() || iit == g.item_index.end())
      throw ParseError(path, line_no, "score references an unknown id");
    rows.push_back({{uit->second, iit->second}, s});
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  EdgeScores scores;
  for (const auto& [e, s] : rows) {
    scores.edges.push_back(e);
    scores.values.push_back(s);
  }
  return scores;
}

std::unique_ptr<Adjudicator> make_backend(const PipelineConfig& cfg) {
  if (cfg.backend == "mock") {
    auto mock = std::make_unique<MockOracleAdjudicator>();
    *mock = MockOracleAdjudicator::from_files(cfg.labels_path, cfg.add_pairs_path);
    return mock;
  }
  const char* key = std::getenv("INVGCLLM_API_KEY");
  return std::make_unique<HttpChatAdjudicator>(cfg.base_url, cfg.model_name,
                                               key ? key : "");
}

}  // namespace

void cmd_split(const PipelineConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  const InteractionFormat fmt = format_from_name(cfg.format);
  const SplitKind kind = split_kind_from_name(cfg.split_kind);

  DataSplit split;
  ExposureReport report;
  if (kind == SplitKind::Exposure) {
    split = exposure_split(cfg.data_path, cfg.test_path, fmt, cfg.tsv_header, &report);
    split.train = filter_min_rating(std::move(split.train), cfg.min_rating);
    split.test = filter_min_rating(std::move(split.test), cfg.min_rating);
  } else {
    auto xs = filter_min_rating(
        ingest_interactions(cfg.data_path, fmt, cfg.tsv_header), cfg.min_rating);
    split = kind == SplitKind::Temporal
                ? temporal_split(std::move(xs), cfg.train_frac, cfg.test_frac)
                : popularity_split(std::move(xs), cfg.test_frac, cfg.seed);
  }

  write_interactions_tsv(path_in(cfg, "train.tsv"), split.train);
  write_interactions_tsv(path_in(cfg, "test.tsv"), split.test);
  write_interactions_tsv(path_in(cfg, "heldout.tsv"), split.held_out);
  write_text(path_in(cfg, "split_report.txt"),
             split_summary(split, kind == SplitKind::Exposure ? &report : nullptr));
  record_stage(cfg, "split");
}

void cmd_train_scores(const PipelineConfig& cfg) {
  cfg.validate();
  const PipelineData d = load_pipeline_data(cfg);

  Stage1Config s1;
  s1.alpha = cfg.alpha;
  s1.beta = cfg.beta;
  s1.epochs = cfg.stage1_epochs;
  s1.learning_rate = cfg.stage1_lr;
  s1.tau = cfg.tau;
  s1.environments = cfg.environments;
  s1.refresh_every = cfg.refresh_every;
  s1.seed = cfg.seed;

  const Stage1Result res = train_scores(d.graph, initial_params(cfg, d.graph), s1);

  save_checkpoint(res.params, path_in(cfg, "stage1.ckpt"));
  {
    std::ofstream out(path_in(cfg, "scores.tsv"));
    if (!out) throw std::runtime_error("cannot write scores.tsv");
    for (std::size_t e = 0; e < res.scores.edges.size(); ++e) {
      const EdgeKey k = res.scores.edges[e];
      out << d.graph.user_ids[k.user] << '\t' << d.graph.item_ids[k.item] << '\t'
          << fmt17(res.scores.values[e]) << '\n';
    }
  }
  {
    std::ofstream out(path_in(cfg, "envs.tsv"));
    if (!out) throw std::runtime_error("cannot write envs.tsv");
    for (std::size_t e = 0; e < res.environments.edges.size(); ++e) {
      const EdgeKey k = res.environments.edges[e];
      out << d.graph.user_ids[k.user] << '\t' << d.graph.item_ids[k.item] << '\t'
          << res.environments.assignment[e] << '\n';
    }
  }
  {
    std::ofstream out(path_in(cfg, "stage1_log.csv"));
    out << "epoch,objective,mean_risk,penalty,score_loss\n";
    for (const Stage1LogRow& r : res.log)
      out << r.epoch << ',' << fmt17(r.objective) << ',' << fmt17(r.mean_risk) << ','
          << fmt17(r.penalty) << ',' << fmt17(r.score_loss) << '\n';
  }
  record_stage(cfg, "train-scores");
}

void cmd_adjudicate(const PipelineConfig& cfg) {
  cfg.validate();
  const PipelineData d = load_pipeline_data(cfg);
  const EdgeScores scores = read_scores(path_in(cfg, "scores.tsv"), d.graph);
  const ParameterSet params = load_checkpoint(path_in(cfg, "stage1.ckpt"));

  const std::size_t k_edit =
      cfg.k_edit > 0 ? cfg.k_edit
                     : static_cast<std::size_t>(
                           std::ceil(0.05 * static_cast<double>(scores.edges.size())));
  const CandidateSets candidates = select_candidates(scores, std::max<std::size_t>(1, k_edit));

  ItemCatalog catalog;
  if (!cfg.catalog_path.empty()) catalog = ItemCatalog::load(cfg.catalog_path);

  const std::string cache_path =
      cfg.cache_path.empty() ? path_in(cfg, "decision_cache.jsonl") : cfg.cache_path;
  DecisionCache cache = DecisionCache::open(cache_path);
  const auto backend = make_backend(cfg);

  AdjudicateOptions opts;
  opts.concurrency = cfg.concurrency;
  opts.deterministic_time = cfg.deterministic;
  AdjudicationStats stats;

  // Bottom candidates drive removals; top candidates are verified but a
  // REMOVE verdict on them is recorded only.
  std::vector<PromptRequest> requests;
  std::vector<EdgeKey> bottom;
  for (const ScoredEdge& se : candidates.spurious_candidates) {
    requests.push_back(make_prompt_request(d.graph, se.edge, se.score, catalog));
    bottom.push_back(se.edge);
  }
  for (const ScoredEdge& se : candidates.causal_candidates)
    requests.push_back(make_prompt_request(d.graph, se.edge, se.score, catalog));

  const auto decisions = adjudicate(requests, *backend, &cache, opts, &stats);

  std::vector<EdgeKey> additions;
  if (cfg.propose_additions)
    additions = propose_additions(true, d.graph, params, cfg.max_additions_per_user,
                                  *backend, &cache, catalog, opts, &stats);

  std::vector<EdgeKey> rejected;
  const GraphViews views = build_views(d.graph, decisions, bottom, additions, &rejected);

  write_edge_list(path_in(cfg, "causal_view.tsv"), d.graph, views.causal_edges);
  write_edge_list(path_in(cfg, "spurious_view.tsv"), d.graph, views.spurious_edges);
  write_edge_list(path_in(cfg, "added_edges.tsv"), d.graph, views.added_edges);
  {
    std::ofstream out(path_in(cfg, "decisions.jsonl"));
    for (std::size_t i = 0; i < decisions.size(); ++i) {
      const auto& dec = decisions[i];
      out << "{\"user\":" << d.graph.user_ids[dec.edge.user]
          << ",\"item\":" << d.graph.item_ids[dec.edge.item] << ",\"verdict\":\""
          << verdict_token(dec.verdict) << "\",\"source\":\"" << source_name(dec.source)
          << "\",\"prompt_hash\":\"" << requests[i].prompt_hash << "\"}\n";
    }
  }
  {
    std::ostringstream out;
    out << "candidates\ttop=" << candidates.causal_candidates.size()
        << "\tbottom=" << candidates.spurious_candidates.size() << "\n"
        << "removed\t" << views.spurious_edges.size() << "\n"
        << "added\t" << views.added_edges.size() << "\n"
        << "rejected_additions\t" << rejected.size() << "\n"
        << "cache_hits\t" << stats.cache_hits << "\n"
        << "backend_calls\t" << stats.backend_calls << "\n"
        << "fallbacks\t" << stats.fallbacks << "\n"
        << "transport_failures\t" << stats.failures << "\n";
    write_text(path_in(cfg, "edit_report.txt"), out.str());
  }
  if (stats.failures > 0)
    std::cerr << "warning: " << stats.failures
              << " adjudication request(s) failed; fallback KEEP applied\n";
  record_stage(cfg, "adjudicate");
}

void cmd_train(const PipelineConfig& cfg) {
  cfg.validate();
  const PipelineData d = load_pipeline_data(cfg);
  ParameterSet params = load_checkpoint(path_in(cfg, "stage1.ckpt"));

  GraphViews views;
  views.causal_edges = read_edge_list(path_in(cfg, "causal_view.tsv"), d.graph);
  views.spurious_edges = read_edge_list(path_in(cfg, "spurious_view.tsv"), d.graph);
  views.added_edges = read_edge_list(path_in(cfg, "added_edges.tsv"), d.graph);

  TrainConfig tc;
  tc.lambda = cfg.lambda;
  tc.temperature = cfg.temperature;
  tc.batch_size = cfg.batch_size;
  tc.epochs = cfg.train_epochs;
  tc.learning_rate = cfg.learning_rate;
  tc.seed = cfg.seed;
  tc.bpr_only = cfg.bpr_only;

  const std::string rolling = path_in(cfg, "checkpoint_latest.ckpt");
  const TrainResult res =
      train(d.graph, views, std::move(params), tc,
            [&rolling](int, const ParameterSet& p) { save_checkpoint(p, rolling); });

  save_checkpoint(res.params, path_in(cfg, "model.ckpt"));
  {
    std::ofstream out(path_in(cfg, "train_log.csv"));
    out << "epoch,cicl,bpr,total,wall_seconds\n";
    for (const TrainEpochLog& r : res.log)
      out << r.epoch << ',' << fmt17(r.cicl) << ',' << fmt17(r.bpr) << ','
          << fmt17(r.total) << ','
          << (cfg.deterministic ? "0" : fmt17(r.wall_seconds)) << '\n';
  }
  record_stage(cfg, "train");
}

void cmd_evaluate(const PipelineConfig& cfg) {
  cfg.validate();
  const PipelineData d = load_pipeline_data(cfg);
  const ParameterSet params = load_checkpoint(path_in(cfg, "model.ckpt"));

  const MetricsReport report = evaluate(params, d.graph, d.test, cfg.k_metric);
  write_metrics_csv(path_in(cfg, "metrics.csv"), report);
  write_per_user_csv(path_in(cfg, "metrics_users.csv"), report);
  write_text(path_in(cfg, "metrics.txt"), metrics_table(report));
  std::cout << metrics_table(report);

  if (cfg.projection) {
    const SparseMatrix adj = normalize_adjacency(d.graph);
    const DenseMatrix h = propagate(adj, params.embedding, params.layers);
    DenseMatrix items(d.graph.num_items, params.dim);
    std::vector<std::int64_t> ids(d.graph.num_items);
    std::vector<std::string> labels(d.graph.num_items, "train");
    std::set<std::int64_t> test_items;
    for (const Interaction& x : d.test) test_items.insert(x.item);
    for (std::uint32_t i = 0; i < d.graph.num_items; ++i) {
      const auto row = h.row(d.graph.item_node(i));
      std::copy(row.begin(), row.end(), items.row(i).begin());
      ids[i] = d.graph.item_ids[i];
      if (test_items.count(ids[i])) labels[i] = "test";
    }
    const Projection proj = project_2d(items);
    if (proj.rank_deficient)
      std::cerr << "warning: embedding covariance is rank-deficient; "
                   "second projection coordinate zeroed\n";
    write_projection_csv(path_in(cfg, "projection.csv"), proj, ids, labels);
  }
  record_stage(cfg, "evaluate");
}

void cmd_run_all(const PipelineConfig& cfg, bool force) {
  cfg.validate();
  struct Stage {
    const char* name;
    void (*run)(const PipelineConfig&);
  };
  const Stage stages[] = {
      {"split", cmd_split},
      {"train-scores", cmd_train_scores},
      {"adjudicate", cmd_adjudicate},
      {"train", cmd_train},
      {"evaluate", cmd_evaluate},
  };
  for (const Stage& s : stages) {
    if (!force && stage_current(cfg, s.name)) {
      std::cout << "stage " << s.name << ": up to date, skipping\n";
      continue;
    }
    std::cout << "stage " << s.name << ": running\n";
    try {
      s.run(cfg);
    } catch (const std::exception& e) {
      throw std::runtime_error("stage " + std::string(s.name) + " failed (" + e.what() +
                               "); artifacts under " + cfg.out_dir);
    }
  }
}

void run_stage(const PipelineConfig& cfg, const std::string& stage, bool force) {
  if (stage == "split") return cmd_split(cfg);
  if (stage == "train-scores") return cmd_train_scores(cfg);
  if (stage == "adjudicate") return cmd_adjudicate(cfg);
  if (stage == "train") return cmd_train(cfg);
  if (stage == "evaluate") return cmd_evaluate(cfg);
  if (stage == "all") return cmd_run_all(cfg, force);
  throw ConfigError("unknown stage: " + stage);
}

}  // namespace invgcllm
