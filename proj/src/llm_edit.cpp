#include "invgcllm/llm_edit.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <thread>

#include "invgcllm/hash.hpp"

#include <httplib.h>
#include <json.hpp>

namespace invgcllm {

std::string fnv1a_hex(std::string_view s) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(s)));
  return buf;
}

CandidateSets select_candidates(const EdgeScores& scores, std::size_t k) {
  if (k == 0) throw std::invalid_argument("select_candidates: k must be >= 1");
  const std::size_t ne = scores.edges.size();
  if (ne == 0) throw std::invalid_argument("select_candidates: empty score map");

  std::vector<std::size_t> order(ne);
  for (std::size_t i = 0; i < ne; ++i) order[i] = i;
  // Ascending by (score, user, item).
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores.values[a] != scores.values[b]) return scores.values[a] < scores.values[b];
    return scores.edges[a] < scores.edges[b];
  });

  CandidateSets out;
  const std::size_t nbottom = std::min(k, ne);
  out.spurious_candidates.reserve(nbottom);
  for (std::size_t i = 0; i < nbottom; ++i)
    out.spurious_candidates.push_back({scores.edges[order[i]], scores.values[order[i]]});

  // Top set from the other end, never re-using a bottom slot.
  for (std::size_t taken = 0, i = ne; i > nbottom && taken < k; --i, ++taken)
    out.causal_candidates.push_back({scores.edges[order[i - 1]], scores.values[order[i - 1]]});
  return out;
}

ItemCatalog ItemCatalog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open catalog: " + path);
  const bool dat = path.size() >= 4 && path.substr(path.size() - 4) == ".dat";
  ItemCatalog cat;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string id_str, title;
    if (dat) {
      const std::size_t sep = line.find("::");
      if (sep == std::string::npos) throw ParseError(path, line_no, "expected '::'");
      id_str = line.substr(0, sep);
      const std::size_t sep2 = line.find("::", sep + 2);
      title = sep2 == std::string::npos ? line.substr(sep + 2)
                                        : line.substr(sep + 2, sep2 - sep - 2);
    } else {
      const std::size_t sep = line.find('\t');
      if (sep == std::string::npos) throw ParseError(path, line_no, "expected a tab");
      id_str = line.substr(0, sep);
      title = line.substr(sep + 1);
    }
    try {
      cat.titles_[std::stoll(id_str)] = title;
    } catch (const std::exception&) {
      throw ParseError(path, line_no, "bad item id '" + id_str + "'");
    }
  }
  return cat;
}

std::string ItemCatalog::title_for(std::int64_t item_id) const {
  const auto it = titles_.find(item_id);
  if (it != titles_.end()) return it->second;
  return "item " + std::to_string(item_id);
}

void ItemCatalog::add(std::int64_t item_id, std::string title) {
  titles_[item_id] = std::move(title);
}

std::string verdict_token(Verdict v) {
  switch (v) {
    case Verdict::Keep: return "KEEP";
    case Verdict::Remove: return "REMOVE";
    case Verdict::Add: return "ADD";
    case Verdict::Skip: return "SKIP";
  }
  return "?";
}

std::string source_name(DecisionSource s) {
  switch (s) {
    case DecisionSource::Llm: return "llm";
    case DecisionSource::Mock: return "mock";
    case DecisionSource::Cache: return "cache";
    case DecisionSource::Fallback: return "fallback";
  }
  return "?";
}

namespace {

std::string format_score(double score) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", score);
  return buf;
}

}  // namespace

std::string build_prompt(std::int64_t user_id, std::int64_t item_id, double score,
                         std::span<const std::string> history_titles,
                         const ItemCatalog& catalog, bool addition) {
  std::ostringstream out;
  out << "You are auditing a recommendation interaction graph.\n";
  if (addition) {
    out << "Task: decide whether ADDING a link between the user and the candidate "
           "item would reflect a stable causal preference.\n";
  } else {
    out << "Task: decide whether the existing link between the user and the "
           "candidate item reflects a stable causal preference or a spurious "
           "correlation.\n";
  }
  out << "\nUser " << user_id << " interaction history (most recent first):\n";
  if (history_titles.empty()) {
    out << "no prior interactions\n";
  } else {
    for (const std::string& t : history_titles) out << "- " << t << "\n";
  }
  out << "\nCandidate item: " << catalog.title_for(item_id) << "\n";
  out << "Model causal score: " << format_score(score) << "\n";
  out << "(causal score: " << format_score(score)
      << "; higher means the link looked more stable across environments)\n\n";
  if (addition) {
    out << "Answer with exactly one word: ADD or SKIP.\n";
  } else {
    out << "Answer with exactly one word: KEEP or REMOVE.\n";
  }
  return out.str();
}

std::vector<std::string> user_history_titles(const BipartiteGraph& g,
                                             std::uint32_t user,
                                             std::optional<std::uint32_t> exclude_item,
                                             const ItemCatalog& catalog,
                                             std::size_t limit) {
  std::vector<const Edge*> history;
  for (const Edge& e : g.edges) {
    if (e.user != user) continue;
    if (exclude_item && e.item == *exclude_item) continue;
    history.push_back(&e);
  }
  std::sort(history.begin(), history.end(), [](const Edge* a, const Edge* b) {
    if (a->timestamp != b->timestamp) return a->timestamp > b->timestamp;
    return a->item < b->item;
  });
  if (history.size() > limit) history.resize(limit);
  std::vector<std::string> out;
  out.reserve(history.size());
  for (const Edge* e : history) out.push_back(catalog.title_for(g.item_ids[e->item]));
  return out;
}

PromptRequest make_prompt_request(const BipartiteGraph& g, EdgeKey edge, double score,
                                  const ItemCatalog& catalog, bool addition) {
  PromptRequest req;
  req.edge = edge;
  req.user_id = g.user_ids[edge.user];
  req.item_id = g.item_ids[edge.item];
  const auto history =
      user_history_titles(g, edge.user, addition ? std::nullopt : std::optional(edge.item),
                          catalog);
  req.prompt = build_prompt(req.user_id, req.item_id, score, history, catalog, addition);
  req.prompt_hash = fnv1a_hex(req.prompt);
  req.addition = addition;
  return req;
}

MockOracleAdjudicator MockOracleAdjudicator::from_files(const std::string& labels_path,
                                                        const std::string& pairs_path) {
  MockOracleAdjudicator mock;
  {
    std::ifstream in(labels_path);
    if (!in) throw std::runtime_error("cannot open labels file: " + labels_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream row(line);
      std::int64_t user, item;
      std::string tag;
      if (!(row >> user >> item >> tag) || (tag != "causal" && tag != "spurious"))
        throw ParseError(labels_path, line_no, "expected 'user item causal|spurious'");
      if (tag == "spurious") mock.spurious_.insert({user, item});
    }
  }
  if (!pairs_path.empty()) {
    std::ifstream in(pairs_path);
    if (!in) throw std::runtime_error("cannot open pairs file: " + pairs_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream row(line);
      std::int64_t user, item;
      if (!(row >> user >> item))
        throw ParseError(pairs_path, line_no, "expected 'user item'");
      mock.consistent_.insert({user, item});
    }
  }
  return mock;
}

void MockOracleAdjudicator::mark_spurious(std::int64_t u, std::int64_t i) {
  spurious_.insert({u, i});
}

void MockOracleAdjudicator::mark_consistent(std::int64_t u, std::int64_t i) {
  consistent_.insert({u, i});
}

std::string MockOracleAdjudicator::complete(const PromptRequest& req) {
  if (req.addition)
    return consistent_.count({req.user_id, req.item_id}) ? "ADD" : "SKIP";
  return spurious_.count({req.user_id, req.item_id}) ? "REMOVE" : "KEEP";
}

HttpChatAdjudicator::HttpChatAdjudicator(std::string base_url, std::string model,
                                         std::string api_key, int max_retries,
                                         int backoff_ms)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      max_retries_(max_retries),
      backoff_ms_(backoff_ms) {}

std::string HttpChatAdjudicator::complete(const PromptRequest& req) {
  nlohmann::json body = {
      {"model", model_},
      {"messages", {{{"role", "user"}, {"content", req.prompt}}}},
      {"temperature", 0},
  };
  const std::string payload = body.dump();

  std::string last_error = "no attempts made";
  for (int attempt = 0; attempt < std::max(1, max_retries_); ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms_ * attempt));
    httplib::Client client(base_url_);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(30, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    ++calls_;
    auto res = client.Post("/v1/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    try {
      const auto parsed = nlohmann::json::parse(res->body);
      return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      last_error = std::string("bad response body: ") + e.what();
      continue;
    }
  }
  throw AdjudicatorError("chat backend failed after " +
                         std::to_string(std::max(1, max_retries_)) +
                         " attempts: " + last_error);
}

DecisionCache DecisionCache::open(const std::string& path) {
  DecisionCache cache;
  cache.path_ = path;
  std::ifstream in(path);
  if (!in) return cache;  // fresh cache
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;  // tolerate a torn tail line
    Record rec;
    rec.prompt_hash = j.value("prompt_hash", "");
    rec.user = j.value("user", static_cast<std::int64_t>(0));
    rec.item = j.value("item", static_cast<std::int64_t>(0));
    rec.verdict = j.value("verdict", "");
    rec.source = j.value("source", "");
    rec.timestamp = j.value("timestamp", static_cast<std::int64_t>(0));
    if (!rec.prompt_hash.empty()) cache.by_hash_[rec.prompt_hash] = rec;
  }
  return cache;
}

const DecisionCache::Record* DecisionCache::find(const std::string& hash) const {
  const auto it = by_hash_.find(hash);
  return it == by_hash_.end() ? nullptr : &it->second;
}

void DecisionCache::append(Record rec) {
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    nlohmann::json j = {{"prompt_hash", rec.prompt_hash}, {"user", rec.user},
                        {"item", rec.item},               {"verdict", rec.verdict},
                        {"source", rec.source},           {"timestamp", rec.timestamp}};
    out << j.dump() << "\n";
  }
  by_hash_[rec.prompt_hash] = std::move(rec);
}

namespace {

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool contains_token(const std::string& text, std::string_view token) {
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !word_char(text[pos - 1]);
    const std::size_t end = pos + token.size();
    const bool right_ok = end >= text.size() || !word_char(text[end]);
    if (left_ok && right_ok) return true;
    pos = end;
  }
  return false;
}

}  // namespace

std::optional<Verdict> parse_verdict(const std::string& response, bool addition) {
  const std::string_view accept = addition ? "ADD" : "KEEP";
  const std::string_view reject = addition ? "SKIP" : "REMOVE";
  const bool has_accept = contains_token(response, accept);
  const bool has_reject = contains_token(response, reject);
  if (has_accept == has_reject) return std::nullopt;  // neither, or ambiguous
  if (addition) return has_accept ? Verdict::Add : Verdict::Skip;
  return has_accept ? Verdict::Keep : Verdict::Remove;
}

namespace {

Verdict fallback_verdict(bool addition) {
  // Never remove or add without an explicit confirmation.
  return addition ? Verdict::Skip : Verdict::Keep;
}

Verdict verdict_from_token(const std::string& token, bool addition) {
  if (!addition) {
    if (token == "KEEP") return Verdict::Keep;
    if (token == "REMOVE") return Verdict::Remove;
  } else {
    if (token == "ADD") return Verdict::Add;
    if (token == "SKIP") return Verdict::Skip;
  }
  return fallback_verdict(addition);
}

}  // namespace

std::vector<AdjudicationDecision> adjudicate(std::span<const PromptRequest> prompts,
                                             Adjudicator& backend, DecisionCache* cache,
                                             const AdjudicateOptions& opts,
                                             AdjudicationStats* stats) {
  AdjudicationStats local;
  AdjudicationStats& st = stats ? *stats : local;
  std::vector<AdjudicationDecision> out(prompts.size());

  const bool mock = backend.name() == "mock-oracle";
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const PromptRequest& req = prompts[i];
    if (cache) {
      if (const DecisionCache::Record* rec = cache->find(req.prompt_hash)) {
        out[i] = {req.edge, verdict_from_token(rec->verdict, req.addition), "",
                  DecisionSource::Cache};
        ++st.cache_hits;
        continue;
      }
    }
    pending.push_back(i);
  }

  const std::size_t bound = std::max<std::size_t>(1, opts.concurrency);
  for (std::size_t start = 0; start < pending.size(); start += bound) {
    const std::size_t end = std::min(pending.size(), start + bound);
    std::vector<std::future<std::pair<std::string, bool>>> slots;
    slots.reserve(end - start);
    for (std::size_t s = start; s < end; ++s) {
      const PromptRequest& req = prompts[pending[s]];
      slots.push_back(std::async(std::launch::async, [&backend, &req] {
        try {
          return std::make_pair(backend.complete(req), true);
        } catch (const std::exception& e) {
          return std::make_pair(std::string(e.what()), false);
        }
      }));
    }
    for (std::size_t s = start; s < end; ++s) {
      const std::size_t idx = pending[s];
      const PromptRequest& req = prompts[idx];
      auto [response, ok] = slots[s - start].get();
      ++st.backend_calls;
      AdjudicationDecision d;
      d.edge = req.edge;
      d.raw_response = response;
      if (!ok) {
        d.verdict = fallback_verdict(req.addition);
        d.source = DecisionSource::Fallback;
        ++st.failures;
        ++st.fallbacks;
      } else if (const auto v = parse_verdict(response, req.addition)) {
        d.verdict = *v;
        d.source = mock ? DecisionSource::Mock : DecisionSource::Llm;
      } else {
        d.verdict = fallback_verdict(req.addition);
        d.source = DecisionSource::Fallback;
        ++st.fallbacks;
      }
      out[idx] = d;
      if (cache) {
        DecisionCache::Record rec;
        rec.prompt_hash = req.prompt_hash;
        rec.user = req.user_id;
        rec.item = req.item_id;
        rec.verdict = verdict_token(d.verdict);
        rec.source = source_name(d.source);
        rec.timestamp = opts.deterministic_time ? 0 : static_cast<std::int64_t>(
                                                          std::time(nullptr));
        cache->append(std::move(rec));
      }
    }
  }
  return out;
}

GraphViews build_views(const BipartiteGraph& g,
                       std::span<const AdjudicationDecision> decisions,
                       std::span<const EdgeKey> bottom_candidates,
                       std::span<const EdgeKey> additions,
                       std::vector<EdgeKey>* rejected_additions) {
  std::map<EdgeKey, Verdict> verdicts;
  for (const AdjudicationDecision& d : decisions) verdicts[d.edge] = d.verdict;

  std::set<EdgeKey> removed;
  for (const EdgeKey& e : bottom_candidates) {
    const auto it = verdicts.find(e);
    if (it == verdicts.end())
      throw std::invalid_argument("build_views: bottom candidate is missing a decision");
    if (it->second == Verdict::Remove) removed.insert(e);
  }

  GraphViews views;
  for (const Edge& e : g.edges) {
    if (removed.count(e.key()))
      views.spurious_edges.push_back(e.key());
    else
      views.causal_edges.push_back(e.key());
  }
  for (const EdgeKey& e : additions) {
    if (e.user >= g.num_users || e.item >= g.num_items || g.has_edge(e.user, e.item)) {
      if (rejected_additions) rejected_additions->push_back(e);
      continue;
    }
    views.added_edges.push_back(e);
  }
  std::sort(views.added_edges.begin(), views.added_edges.end());
  views.added_edges.erase(
      std::unique(views.added_edges.begin(), views.added_edges.end()),
      views.added_edges.end());
  views.causal_edges.insert(views.causal_edges.end(), views.added_edges.begin(),
                            views.added_edges.end());
  std::sort(views.causal_edges.begin(), views.causal_edges.end());
  std::sort(views.spurious_edges.begin(), views.spurious_edges.end());
  return views;
}

std::vector<EdgeKey> propose_additions(bool enabled, const BipartiteGraph& g,
                                       const ParameterSet& params,
                                       std::size_t per_user_limit, Adjudicator& backend,
                                       DecisionCache* cache, const ItemCatalog& catalog,
                                       const AdjudicateOptions& opts,
                                       AdjudicationStats* stats) {
  if (!enabled || per_user_limit == 0) return {};

  const SparseMatrix adj = normalize_adjacency(g);
  const DenseMatrix h_mask = propagate(adj, params.mask_embedding, params.mask_layers);

  std::vector<PromptRequest> requests;
  for (std::uint32_t u = 0; u < g.num_users; ++u) {
    std::vector<ScoredEdge> unobserved;
    for (std::uint32_t i = 0; i < g.num_items; ++i) {
      if (g.has_edge(u, i)) continue;
      unobserved.push_back({{u, i}, score_pair(g, h_mask, params, u, i)});
    }
    std::sort(unobserved.begin(), unobserved.end(),
              [](const ScoredEdge& a, const ScoredEdge& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.edge < b.edge;
              });
    if (unobserved.size() > per_user_limit) unobserved.resize(per_user_limit);
    for (const ScoredEdge& se : unobserved)
      requests.push_back(make_prompt_request(g, se.edge, se.score, catalog, true));
  }

  const auto decisions = adjudicate(requests, backend, cache, opts, stats);
  std::vector<EdgeKey> accepted;
  for (const auto& d : decisions)
    if (d.verdict == Verdict::Add) accepted.push_back(d.edge);
  std::sort(accepted.begin(), accepted.end());
  return accepted;
}

}  // namespace invgcllm
