#include "invgcllm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "invgcllm/encoder.hpp"

namespace invgcllm {

std::vector<std::uint32_t> rank_items(std::uint32_t user, const DenseMatrix& h,
                                      std::size_t num_users, std::size_t num_items,
                                      std::span<const std::uint32_t> exclude_sorted) {
  std::vector<std::pair<double, std::uint32_t>> scored;
  scored.reserve(num_items);
  const auto hu = h.row(user);
  for (std::uint32_t i = 0; i < num_items; ++i) {
    if (std::binary_search(exclude_sorted.begin(), exclude_sorted.end(), i)) continue;
    scored.emplace_back(dot(hu, h.row(num_users + i)), i);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::uint32_t> out;
  out.reserve(scored.size());
  for (const auto& [s, i] : scored) out.push_back(i);
  return out;
}

UserMetrics metrics_at_k(std::span<const std::uint32_t> ranked,
                         std::span<const std::uint32_t> relevant_sorted, std::size_t k) {
  if (k == 0) throw std::invalid_argument("metrics_at_k: k must be >= 1");
  UserMetrics m;
  m.relevant = relevant_sorted.size();
  double dcg = 0.0;
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t r = 0; r < depth; ++r) {
    if (std::binary_search(relevant_sorted.begin(), relevant_sorted.end(), ranked[r])) {
      ++m.hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, relevant_sorted.size());
  for (std::size_t r = 0; r < ideal; ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
  m.precision = static_cast<double>(m.hits) / static_cast<double>(k);
  m.recall = m.relevant == 0 ? 0.0
                             : static_cast<double>(m.hits) / static_cast<double>(m.relevant);
  return m;
}

MetricsReport evaluate(const ParameterSet& params, const BipartiteGraph& g_train,
                       const std::vector<Interaction>& test, std::size_t k) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test split");
  if (params.embedding.rows != g_train.num_nodes())
    throw std::invalid_argument("evaluate: parameters disagree with the node space");

  const SparseMatrix adj = normalize_adjacency(g_train);
  const DenseMatrix h = propagate(adj, params.embedding, params.layers);

  MetricsReport report;
  report.k = k;

  std::map<std::uint32_t, std::set<std::uint32_t>> test_items;
  for (const Interaction& x : test) {
    const auto uit = g_train.user_index.find(x.user);
    const auto iit = g_train.item_index.find(x.item);
    if (uit == g_train.user_index.end() || iit == g_train.item_index.end()) {
      ++report.unmapped_rows;
      continue;
    }
    test_items[uit->second].insert(iit->second);
  }

  for (const auto& [user, items] : test_items) {
    const auto& train_items = g_train.items_of_user[user];
    std::vector<std::uint32_t> relevant;
    for (std::uint32_t i : items)
      if (!std::binary_search(train_items.begin(), train_items.end(), i))
        relevant.push_back(i);
    if (relevant.empty()) {
      ++report.users_skipped;
      continue;
    }
    const auto ranked =
        rank_items(user, h, g_train.num_users, g_train.num_items, train_items);
    UserMetrics m = metrics_at_k(ranked, relevant, k);
    m.user_id = g_train.user_ids[user];
    report.ndcg += m.ndcg;
    report.precision += m.precision;
    report.recall += m.recall;
    report.per_user.push_back(m);
    ++report.users_evaluated;
  }
  if (report.users_evaluated == 0)
    throw std::runtime_error("evaluate: zero evaluable users");
  const double n = static_cast<double>(report.users_evaluated);
  report.ndcg /= n;
  report.precision /= n;
  report.recall /= n;
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string metrics_table(const MetricsReport& r) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "metric        @%zu\n", r.k);
  out << buf;
  std::snprintf(buf, sizeof(buf), "ndcg          %.6f\n", r.ndcg);
  out << buf;
  std::snprintf(buf, sizeof(buf), "precision     %.6f\n", r.precision);
  out << buf;
  std::snprintf(buf, sizeof(buf), "recall        %.6f\n", r.recall);
  out << buf;
  out << "users         " << r.users_evaluated << " evaluated, " << r.users_skipped
      << " skipped, " << r.unmapped_rows << " unmapped rows\n";
  return out.str();
}

void write_metrics_csv(const std::string& path, const MetricsReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "k,ndcg,precision,recall,users_evaluated,users_skipped,unmapped_rows\n";
  out << r.k << ',' << fmt(r.ndcg) << ',' << fmt(r.precision) << ',' << fmt(r.recall)
      << ',' << r.users_evaluated << ',' << r.users_skipped << ',' << r.unmapped_rows
      << '\n';
}

void write_per_user_csv(const std::string& path, const MetricsReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "user,ndcg,precision,recall,hits,relevant\n";
  for (const UserMetrics& m : r.per_user)
    out << m.user_id << ',' << fmt(m.ndcg) << ',' << fmt(m.precision) << ','
        << fmt(m.recall) << ',' << m.hits << ',' << m.relevant << '\n';
}

namespace {

// Cyclic Jacobi eigensolver for small symmetric matrices. Deterministic
// sweep order; enough for the d x d covariance here.
void symmetric_eigen(DenseMatrix a, std::vector<double>& eigenvalues,
                     DenseMatrix& eigenvectors) {
  const std::size_t n = a.rows;
  eigenvectors = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) eigenvectors(i, i) = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
          const double vip = eigenvectors(i, p), viq = eigenvectors(i, q);
          eigenvectors(i, p) = c * vip - s * viq;
          eigenvectors(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a(i, i);
}

}  // namespace

Projection project_2d(const DenseMatrix& rows) {
  const std::size_t n = rows.rows;
  const std::size_t d = rows.cols;
  if (d < 2) throw std::invalid_argument("project_2d: need at least 2 dimensions");

  DenseMatrix centered = rows;
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += centered(r, c);
    mean /= static_cast<double>(n == 0 ? 1 : n);
    for (std::size_t r = 0; r < n; ++r) centered(r, c) -= mean;
  }

  DenseMatrix cov(d, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov(i, j) += centered(r, i) * centered(r, j);

  std::vector<double> eigenvalues;
  DenseMatrix vecs;
  symmetric_eigen(cov, eigenvalues, vecs);

  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (eigenvalues[a] != eigenvalues[b]) return eigenvalues[a] > eigenvalues[b];
    return a < b;
  });

  Projection p;
  p.rank_deficient =
      eigenvalues[order[1]] <= 1e-12 * std::max(1.0, std::abs(eigenvalues[order[0]]));

  for (int comp = 0; comp < 2; ++comp) {
    std::vector<double> v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = vecs(i, order[static_cast<std::size_t>(comp)]);
    if (comp == 1 && p.rank_deficient) {
      std::fill(v.begin(), v.end(), 0.0);
    } else {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < d; ++i)
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
      if (v[arg] < 0.0)
        for (double& x : v) x = -x;
    }
    p.components[static_cast<std::size_t>(comp)] = std::move(v);
  }

  p.coords.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (int comp = 0; comp < 2; ++comp) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        s += centered(r, i) * p.components[static_cast<std::size_t>(comp)][i];
      p.coords[r][static_cast<std::size_t>(comp)] = s;
    }
  }
  return p;
}

void write_projection_csv(const std::string& path, const Projection& p,
                          std::span<const std::int64_t> node_ids,
                          std::span<const std::string> labels) {
  if (node_ids.size() != p.coords.size() || labels.size() != p.coords.size())
    throw std::invalid_argument("write_projection_csv: length mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "node,x,y,label\n";
  for (std::size_t i = 0; i < p.coords.size(); ++i)
    out << node_ids[i] << ',' << fmt(p.coords[i][0]) << ',' << fmt(p.coords[i][1]) << ','
        << labels[i] << '\n';
}

}  // namespace invgcllm
