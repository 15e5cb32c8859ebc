#include "invgcllm/splits.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "invgcllm/rng.hpp"

namespace invgcllm {

SplitKind split_kind_from_name(std::string_view name) {
  if (name == "temporal") return SplitKind::Temporal;
  if (name == "popularity") return SplitKind::Popularity;
  if (name == "exposure") return SplitKind::Exposure;
  throw ConfigError("unknown split kind: " + std::string(name));
}

std::string split_kind_name(SplitKind k) {
  switch (k) {
    case SplitKind::Temporal: return "temporal";
    case SplitKind::Popularity: return "popularity";
    case SplitKind::Exposure: return "exposure";
  }
  return "?";
}

DataSplit temporal_split(std::vector<Interaction> xs, double train_frac,
                         double test_frac) {
  if (xs.size() < 5)
    throw std::invalid_argument("temporal_split: need at least 5 interactions, got " +
                                std::to_string(xs.size()));
  if (train_frac <= 0 || test_frac <= 0 || train_frac + test_frac > 1.0)
    throw std::invalid_argument("temporal_split: bad fractions");
  std::sort(xs.begin(), xs.end(), [](const Interaction& a, const Interaction& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.user != b.user) return a.user < b.user;
    return a.item < b.item;
  });
  const std::size_t n = xs.size();
  const std::size_t n_train = static_cast<std::size_t>(std::floor(train_frac * n));
  const std::size_t n_test = static_cast<std::size_t>(std::ceil(test_frac * n));
  DataSplit s;
  s.train.assign(xs.begin(), xs.begin() + n_train);
  s.test.assign(xs.end() - n_test, xs.end());
  s.held_out.assign(xs.begin() + n_train, xs.end() - n_test);
  return s;
}

DataSplit popularity_split(std::vector<Interaction> xs, double test_frac,
                           std::uint64_t seed) {
  const std::size_t n = xs.size();
  if (test_frac <= 0 || test_frac > 1.0)
    throw std::invalid_argument("popularity_split: test_frac out of range");

  // Stable canonical order first so the sampled split depends only on
  // (multiset of rows, seed).
  std::sort(xs.begin(), xs.end(), [](const Interaction& a, const Interaction& b) {
    if (a.item != b.item) return a.item < b.item;
    if (a.user != b.user) return a.user < b.user;
    return a.timestamp < b.timestamp;
  });

  std::map<std::int64_t, std::vector<std::size_t>> per_item;  // item -> row indices
  for (std::size_t i = 0; i < n; ++i) per_item[xs[i].item].push_back(i);
  if (per_item.size() < 2)
    throw std::invalid_argument("popularity_split: need at least 2 items");

  const double target = test_frac * static_cast<double>(n);
  std::size_t max_count = 0;
  for (const auto& [item, rows] : per_item) max_count = std::max(max_count, rows.size());

  std::size_t cap = 1;
  for (; cap <= max_count; ++cap) {
    std::size_t total = 0;
    for (const auto& [item, rows] : per_item) total += std::min(rows.size(), cap);
    if (static_cast<double>(total) >= target) break;
  }

  Rng rng(seed);
  std::vector<std::size_t> pool;  // capped per-item sample
  for (const auto& [item, rows] : per_item) {
    const std::size_t take = std::min(rows.size(), cap);
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    // Partial Fisher-Yates: first `take` positions are the sample.
    for (std::size_t j = 0; j < take; ++j) {
      const std::size_t pick = j + rng.uniform_index(idx.size() - j);
      std::swap(idx[j], idx[pick]);
    }
    pool.insert(pool.end(), idx.begin(), idx.begin() + take);
  }

  const std::size_t want = static_cast<std::size_t>(std::ceil(target));
  if (pool.size() > want) {
    for (std::size_t j = 0; j < want; ++j) {
      const std::size_t pick = j + rng.uniform_index(pool.size() - j);
      std::swap(pool[j], pool[pick]);
    }
    pool.resize(want);
  }

  std::vector<bool> in_test(n, false);
  for (std::size_t i : pool) in_test[i] = true;
  DataSplit s;
  for (std::size_t i = 0; i < n; ++i)
    (in_test[i] ? s.test : s.train).push_back(xs[i]);
  return s;
}

DataSplit exposure_split(const std::string& train_path, const std::string& test_path,
                         InteractionFormat format, bool tsv_header,
                         ExposureReport* report) {
  DataSplit s;
  s.train = ingest_interactions(train_path, format, tsv_header);
  s.test = ingest_interactions(test_path, format, tsv_header);
  if (report) {
    std::set<std::int64_t> train_users, train_items;
    std::set<std::pair<std::int64_t, std::int64_t>> train_pairs;
    for (const Interaction& x : s.train) {
      train_users.insert(x.user);
      train_items.insert(x.item);
      train_pairs.insert({x.user, x.item});
    }
    std::set<std::int64_t> cold_users, cold_items;
    for (const Interaction& x : s.test) {
      if (!train_users.count(x.user)) cold_users.insert(x.user);
      if (!train_items.count(x.item)) cold_items.insert(x.item);
      if (train_pairs.count({x.user, x.item})) ++report->overlap_pairs;
    }
    report->cold_users.assign(cold_users.begin(), cold_users.end());
    report->cold_items.assign(cold_items.begin(), cold_items.end());
  }
  return s;
}

std::string split_summary(const DataSplit& split, const ExposureReport* report) {
  std::ostringstream out;
  out << "rows\ttrain=" << split.train.size() << "\ttest=" << split.test.size()
      << "\theld_out=" << split.held_out.size() << "\n";

  std::map<std::int64_t, std::size_t> test_pop;
  for (const Interaction& x : split.test) ++test_pop[x.item];
  std::map<std::size_t, std::size_t> histogram;  // test count -> #items
  for (const auto& [item, c] : test_pop) ++histogram[c];
  out << "test item popularity histogram (count\titems)\n";
  for (const auto& [c, items] : histogram) out << c << '\t' << items << '\n';

  if (report) {
    out << "overlap pairs\t" << report->overlap_pairs << '\n';
    out << "cold test users\t" << report->cold_users.size() << '\n';
    for (std::int64_t u : report->cold_users) out << "cold_user\t" << u << '\n';
    out << "cold test items\t" << report->cold_items.size() << '\n';
    for (std::int64_t i : report->cold_items) out << "cold_item\t" << i << '\n';
  }
  return out.str();
}

}  // namespace invgcllm
