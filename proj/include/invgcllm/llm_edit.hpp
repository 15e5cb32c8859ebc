#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "invgcllm/env_extractor.hpp"
#include "invgcllm/graph.hpp"

namespace invgcllm {

struct ScoredEdge {
  EdgeKey edge;
  double score = 0.0;
};

// Top-K / bottom-K edges by score; overlap goes to the bottom set, so the
// two sequences are always disjoint.
struct CandidateSets {
  std::vector<ScoredEdge> causal_candidates;    // highest scores first
  std::vector<ScoredEdge> spurious_candidates;  // lowest scores first
};
CandidateSets select_candidates(const EdgeScores& scores, std::size_t k);

// Optional item-title catalog, used only when rendering prompts.
// TSV "item<TAB>title"; files ending in .dat use "item::title[::genres]".
class ItemCatalog {
 public:
  static ItemCatalog load(const std::string& path);
  std::string title_for(std::int64_t item_id) const;  // "item <id>" fallback
  void add(std::int64_t item_id, std::string title);
  std::size_t size() const { return titles_.size(); }

 private:
  std::unordered_map<std::int64_t, std::string> titles_;
};

enum class Verdict { Keep, Remove, Add, Skip };
enum class DecisionSource { Llm, Mock, Cache, Fallback };

std::string verdict_token(Verdict v);
std::string source_name(DecisionSource s);

struct AdjudicationDecision {
  EdgeKey edge;
  Verdict verdict = Verdict::Keep;
  std::string raw_response;
  DecisionSource source = DecisionSource::Fallback;
};

struct PromptRequest {
  EdgeKey edge;               // dense indices
  std::int64_t user_id = 0;   // original ids, recorded in the cache
  std::int64_t item_id = 0;
  std::string prompt;
  std::string prompt_hash;
  bool addition = false;  // ADD/SKIP variant instead of KEEP/REMOVE
};

// Deterministic template: recent history titles (at most 20), the candidate
// item, the numeric causal score, and a one-word answer instruction.
std::string build_prompt(std::int64_t user_id, std::int64_t item_id, double score,
                         std::span<const std::string> history_titles,
                         const ItemCatalog& catalog, bool addition = false);

// Most recent items of `user` (timestamps descending, ties by item index),
// excluding `exclude_item`, rendered through the catalog.
std::vector<std::string> user_history_titles(const BipartiteGraph& g,
                                             std::uint32_t user,
                                             std::optional<std::uint32_t> exclude_item,
                                             const ItemCatalog& catalog,
                                             std::size_t limit = 20);

PromptRequest make_prompt_request(const BipartiteGraph& g, EdgeKey edge, double score,
                                  const ItemCatalog& catalog, bool addition = false);

struct AdjudicatorError : std::runtime_error {
  explicit AdjudicatorError(const std::string& what) : std::runtime_error(what) {}
};

// Backend interface. complete() must be callable from multiple threads.
class Adjudicator {
 public:
  virtual ~Adjudicator() = default;
  virtual std::string name() const = 0;
  virtual std::string complete(const PromptRequest& request) = 0;
};

// Deterministic oracle backed by ground-truth labels; answers REMOVE for
// edges labeled spurious and ADD for listed causally-consistent pairs.
class MockOracleAdjudicator : public Adjudicator {
 public:
  MockOracleAdjudicator() = default;
  static MockOracleAdjudicator from_files(const std::string& labels_path,
                                          const std::string& pairs_path = "");
  void mark_spurious(std::int64_t user_id, std::int64_t item_id);
  void mark_consistent(std::int64_t user_id, std::int64_t item_id);

  std::string name() const override { return "mock-oracle"; }
  std::string complete(const PromptRequest& request) override;

 private:
  std::set<std::pair<std::int64_t, std::int64_t>> spurious_;
  std::set<std::pair<std::int64_t, std::int64_t>> consistent_;
};

// OpenAI-compatible chat-completions client: POST {base}/v1/chat/completions
// with temperature 0; API key from the environment (never a flag).
class HttpChatAdjudicator : public Adjudicator {
 public:
  HttpChatAdjudicator(std::string base_url, std::string model, std::string api_key,
                      int max_retries = 3, int backoff_ms = 200);
  std::string name() const override { return "http-chat"; }
  std::string complete(const PromptRequest& request) override;
  std::size_t calls_made() const { return calls_; }

 private:
  std::string base_url_;
  std::string model_;
  std::string api_key_;
  int max_retries_;
  int backoff_ms_;
  std::atomic<std::size_t> calls_{0};
};

// JSON-lines store of past decisions, keyed by prompt hash; write-through.
class DecisionCache {
 public:
  struct Record {
    std::string prompt_hash;
    std::int64_t user = 0;
    std::int64_t item = 0;
    std::string verdict;
    std::string source;
    std::int64_t timestamp = 0;
  };

  static DecisionCache open(const std::string& path);
  const Record* find(const std::string& prompt_hash) const;
  void append(Record rec);
  std::size_t size() const { return by_hash_.size(); }

 private:
  std::string path_;
  std::unordered_map<std::string, Record> by_hash_;
};

// Exact-token scan; nullopt when neither or both tokens of the pair occur.
std::optional<Verdict> parse_verdict(const std::string& response, bool addition);

struct AdjudicateOptions {
  std::size_t concurrency = 4;
  bool deterministic_time = true;  // zero timestamps in cache records
};

struct AdjudicationStats {
  std::size_t cache_hits = 0;
  std::size_t backend_calls = 0;
  std::size_t fallbacks = 0;
  std::size_t failures = 0;  // transport failures after retries
};

// Cache-first adjudication; transport failures and unparseable responses
// degrade to the conservative verdict (KEEP / SKIP) and never abort.
std::vector<AdjudicationDecision> adjudicate(std::span<const PromptRequest> prompts,
                                             Adjudicator& backend, DecisionCache* cache,
                                             const AdjudicateOptions& opts = {},
                                             AdjudicationStats* stats = nullptr);

// The causal view (E \ removed) ∪ added and the spurious view (= removed).
struct GraphViews {
  std::vector<EdgeKey> causal_edges;    // sorted
  std::vector<EdgeKey> spurious_edges;  // sorted
  std::vector<EdgeKey> added_edges;     // sorted, subset of causal_edges
};

// removals may only come from the bottom candidates; additions that
// duplicate observed edges are rejected and reported.
GraphViews build_views(const BipartiteGraph& g,
                       std::span<const AdjudicationDecision> decisions,
                       std::span<const EdgeKey> bottom_candidates,
                       std::span<const EdgeKey> additions = {},
                       std::vector<EdgeKey>* rejected_additions = nullptr);

// Scores unobserved pairs with the edge-score model, keeps the top
// `per_user_limit` per user and submits ADD/SKIP prompts.
std::vector<EdgeKey> propose_additions(bool enabled, const BipartiteGraph& g,
                                       const ParameterSet& params,
                                       std::size_t per_user_limit, Adjudicator& backend,
                                       DecisionCache* cache, const ItemCatalog& catalog,
                                       const AdjudicateOptions& opts = {},
                                       AdjudicationStats* stats = nullptr);

}  // namespace invgcllm
