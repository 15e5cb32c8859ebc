#include "invgcllm/synthetic.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "invgcllm/rng.hpp"

namespace invgcllm {

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.trendy_items + cfg.causal_per_user + cfg.test_per_user > cfg.num_items)
    throw std::invalid_argument("generate_synthetic: item budget too small");
  if (cfg.trendy_items < 2)
    throw std::invalid_argument("generate_synthetic: need at least 2 trendy items");

  Rng rng(mix_seed(cfg.seed, 0x51f7));
  const std::size_t f = cfg.latent_dim;

  std::vector<std::vector<double>> user_factors(cfg.num_users, std::vector<double>(f));
  std::vector<std::vector<double>> item_factors(cfg.num_items, std::vector<double>(f));
  for (auto& p : user_factors)
    for (double& v : p) v = rng.normal();
  for (auto& q : item_factors)
    for (double& v : q) v = rng.normal();

  // Trendy pools carry the environment-only correlation; keep them out of
  // the causal candidate set entirely.
  std::vector<std::size_t> item_order(cfg.num_items);
  for (std::size_t i = 0; i < cfg.num_items; ++i) item_order[i] = i;
  for (std::size_t i = 0; i + 1 < item_order.size(); ++i) {
    const std::size_t j = i + rng.uniform_index(item_order.size() - i);
    std::swap(item_order[i], item_order[j]);
  }
  std::set<std::size_t> trendy(item_order.begin(),
                               item_order.begin() + static_cast<std::ptrdiff_t>(cfg.trendy_items));
  std::vector<std::size_t> pool_a, pool_b;
  {
    std::size_t n = 0;
    for (std::size_t i : trendy) (n++ % 2 == 0 ? pool_a : pool_b).push_back(i);
  }

  SyntheticData data;
  std::int64_t ts = 1000;
  for (std::size_t u = 0; u < cfg.num_users; ++u) {
    const auto uid = static_cast<std::int64_t>(u + 1);

    std::vector<std::pair<double, std::size_t>> affinity;
    for (std::size_t i = 0; i < cfg.num_items; ++i) {
      if (trendy.count(i)) continue;
      double a = 0.0;
      for (std::size_t c = 0; c < f; ++c) a += user_factors[u][c] * item_factors[i][c];
      affinity.emplace_back(a, i);
    }
    std::sort(affinity.begin(), affinity.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });

    // Shuffle the top window so train/test causal edges are exchangeable.
    const std::size_t window = cfg.causal_per_user + cfg.test_per_user;
    std::vector<std::size_t> top;
    for (std::size_t i = 0; i < window && i < affinity.size(); ++i)
      top.push_back(affinity[i].second);
    for (std::size_t i = 0; i + 1 < top.size(); ++i) {
      const std::size_t j = i + rng.uniform_index(top.size() - i);
      std::swap(top[i], top[j]);
    }
    for (std::size_t i = 0; i < top.size(); ++i) {
      const auto iid = static_cast<std::int64_t>(top[i] + 1);
      if (i < cfg.causal_per_user) {
        data.train.push_back({uid, iid, 5.0, ts++});
        data.labels.emplace_back(uid, iid, false);
      } else {
        data.test.push_back({uid, iid, 5.0, ts + 100000});
      }
    }

    // Environment-correlated interactions: half the users draw from pool A,
    // the other half from pool B. These never appear in the test period.
    const auto& pool = (u % 2 == 0) ? pool_a : pool_b;
    std::vector<std::size_t> picks(pool);
    for (std::size_t i = 0; i + 1 < picks.size(); ++i) {
      const std::size_t j = i + rng.uniform_index(picks.size() - i);
      std::swap(picks[i], picks[j]);
    }
    const std::size_t nspur = std::min(cfg.spurious_per_user, picks.size());
    for (std::size_t i = 0; i < nspur; ++i) {
      const auto iid = static_cast<std::int64_t>(picks[i] + 1);
      data.train.push_back({uid, iid, 3.0, ts++});
      data.labels.emplace_back(uid, iid, true);
    }

    // Next-best latent matches outside the observed window.
    for (std::size_t i = window; i < window + 2 && i < affinity.size(); ++i)
      data.consistent_pairs.emplace_back(
          uid, static_cast<std::int64_t>(affinity[i].second + 1));
  }

  for (std::size_t i = 0; i < cfg.num_items; ++i) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < f; ++c)
      if (std::abs(item_factors[i][c]) > std::abs(item_factors[i][arg])) arg = c;
    const std::string kind = trendy.count(i) ? "trend" : "genre";
    data.catalog.emplace_back(static_cast<std::int64_t>(i + 1),
                              "item-" + std::to_string(i + 1) + " (" + kind + "-" +
                                  std::to_string(arg) + ")");
  }
  return data;
}

void write_synthetic(const SyntheticData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_interactions_tsv(dir + "/train.tsv", data.train);
  write_interactions_tsv(dir + "/test.tsv", data.test);
  {
    std::ofstream out(dir + "/labels.tsv");
    if (!out) throw std::runtime_error("cannot write labels.tsv");
    for (const auto& [u, i, spurious] : data.labels)
      out << u << '\t' << i << '\t' << (spurious ? "spurious" : "causal") << '\n';
  }
  {
    std::ofstream out(dir + "/consistent_pairs.tsv");
    if (!out) throw std::runtime_error("cannot write consistent_pairs.tsv");
    for (const auto& [u, i] : data.consistent_pairs) out << u << '\t' << i << '\n';
  }
  {
    std::ofstream out(dir + "/catalog.tsv");
    if (!out) throw std::runtime_error("cannot write catalog.tsv");
    for (const auto& [i, title] : data.catalog) out << i << '\t' << title << '\n';
  }
}

}  // namespace invgcllm
