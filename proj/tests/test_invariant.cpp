#include <doctest.h>

#include <cmath>

#include "invgcllm/gradcheck.hpp"
#include "invgcllm/invariant.hpp"
#include "test_util.hpp"

using namespace invgcllm;

namespace {

// Fixture: graph, scores from the current params, frozen decomposition and
// environment labels.
struct Stage1Fixture {
  BipartiteGraph g;
  SparseMatrix adj;
  ParameterSet params;
  Decomposition dec;
  EnvironmentPartition envs;
  Stage1Config cfg;

  Stage1Fixture(std::size_t users, std::size_t items, std::size_t extra,
                std::uint64_t seed, double tau, std::size_t k) {
    g = testutil::random_graph(users, items, extra, seed);
    adj = normalize_adjacency(g);
    params = ParameterSet::init(g.num_nodes(), 4, 2, 1, 4, seed + 1);
    cfg.tau = tau;
    cfg.environments = k;
    cfg.seed = seed + 2;
    const auto scores = score_edges(g, adj, params);
    dec = decompose(g, scores, tau);
    envs = infer_environments(g, dec, params, k, seed + 3);
  }

  Stage1Objective objective() const { return Stage1Objective(g, adj, dec, envs, cfg); }
};

}  // namespace

TEST_CASE("env_risk is ln 2 when all score differences vanish") {
  Stage1Fixture fx(5, 6, 8, 21, 0.6, 2);
  fx.params.mask_embedding.fill(0.0);  // all margins become zero
  const auto obj = fx.objective();
  for (std::size_t e = 0; e < obj.num_envs(); ++e) {
    const auto risk = obj.env_risk(static_cast<int>(e), fx.params);
    CHECK(risk.risk == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(risk.gradient.size() == fx.params.stage1_size());
  }
}

TEST_CASE("duplicate environments produce identical risks and gradients") {
  // With tau = 1 every edge is invariant, so every environment shares the
  // same positive set and, by content-addressed seeding, the same negatives.
  Stage1Fixture fx(5, 6, 8, 23, 1.0, 2);
  Stage1Config cfg = fx.cfg;
  EnvironmentPartition two_envs;
  two_envs.k = 2;
  const auto obj = Stage1Objective(fx.g, fx.adj, fx.dec, two_envs, cfg);
  REQUIRE(obj.num_envs() == 2);
  const auto r0 = obj.env_risk(0, fx.params);
  const auto r1 = obj.env_risk(1, fx.params);
  CHECK(r0.risk == r1.risk);
  CHECK(r0.gradient == r1.gradient);

  const std::vector<EnvironmentRisk> risks = {r0, r1};
  CHECK(grad_variance(risks) < 1e-12);
}

TEST_CASE("env_risk gradient passes finite differences") {
  Stage1Fixture fx(4, 4, 6, 25, 0.6, 2);
  const auto obj = fx.objective();
  const auto risk = obj.env_risk(0, fx.params);
  ParameterSet work = fx.params;
  const auto loss = [&](std::span<const double> flat) {
    work.stage1_unflatten(flat);
    return obj.env_risk(0, work).risk;
  };
  CHECK(finite_diff_check(loss, fx.params.stage1_flatten(), risk.gradient) < 1e-4);
}

TEST_CASE("grad_variance closed forms") {
  SUBCASE("identical gradients give zero") {
    EnvironmentRisk a{0, 1.0, {0.3, -0.2, 0.5}};
    EnvironmentRisk b{1, 2.0, {0.3, -0.2, 0.5}};
    const std::vector<EnvironmentRisk> risks = {a, b};
    CHECK(grad_variance(risks) == 0.0);
  }
  SUBCASE("hand-computed two-environment example") {
    EnvironmentRisk a{0, 0.0, {1.0, 0.0}};
    EnvironmentRisk b{1, 0.0, {0.0, 1.0}};
    const std::vector<EnvironmentRisk> risks = {a, b};
    CHECK(grad_variance(risks) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("a single environment has zero variance") {
    EnvironmentRisk a{0, 0.0, {1.0, 2.0, 3.0}};
    const std::vector<EnvironmentRisk> risks = {a};
    CHECK(grad_variance(risks) == 0.0);
  }
  SUBCASE("mismatched lengths are rejected") {
    EnvironmentRisk a{0, 0.0, {1.0}};
    EnvironmentRisk b{1, 0.0, {1.0, 2.0}};
    const std::vector<EnvironmentRisk> risks = {a, b};
    CHECK_THROWS(grad_variance(risks));
  }
}

TEST_CASE("score loss closed forms") {
  SUBCASE("S=1, P=1 contributes about zero") {
    const std::vector<double> s = {1.0}, p = {1.0};
    CHECK(score_loss_value(s, p) < 1e-4);
  }
  SUBCASE("S=0.5, P=0.5 is ln 2 per edge") {
    const std::vector<double> s = {0.5}, p = {0.5};
    CHECK(score_loss_value(s, p) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("minimized over P at P = S") {
    const double s = 0.3;
    const std::vector<double> sv = {s};
    double best_p = -1.0, best = 1e100;
    for (double p = 0.01; p < 1.0; p += 0.01) {
      const std::vector<double> pv = {p};
      const double v = score_loss_value(sv, pv);
      if (v < best) {
        best = v;
        best_p = p;
      }
    }
    CHECK(best_p == doctest::Approx(s).epsilon(0.02));
  }
}

TEST_CASE("score term gradient passes finite differences") {
  Stage1Fixture fx(4, 4, 5, 27, 0.6, 2);
  const auto obj = fx.objective();
  const auto term = obj.score_term(fx.params);
  ParameterSet work = fx.params;
  const auto loss = [&](std::span<const double> flat) {
    work.stage1_unflatten(flat);
    return obj.score_term(work).value;
  };
  CHECK(finite_diff_check(loss, fx.params.stage1_flatten(), term.gradient) < 1e-4);
}

TEST_CASE("full stage-1 objective gradient passes finite differences") {
  Stage1Fixture fx(4, 5, 6, 29, 0.6, 2);
  fx.cfg.alpha = 0.1;
  fx.cfg.beta = 1.0;
  const auto obj = fx.objective();
  const auto ev = obj.evaluate_with_gradient(fx.params);
  CHECK(ev.objective ==
        doctest::Approx(ev.mean_risk + fx.cfg.alpha * ev.penalty +
                        fx.cfg.beta * ev.score_loss));
  ParameterSet work = fx.params;
  const auto loss = [&](std::span<const double> flat) {
    work.stage1_unflatten(flat);
    return obj.evaluate(work);
  };
  CHECK(finite_diff_check(loss, fx.params.stage1_flatten(), ev.gradient) < 1e-4);
}

TEST_CASE("stage-1 training: plain risk decreases with alpha = beta = 0, K = 1") {
  const auto g = testutil::random_graph(8, 12, 20, 31);  // 20 nodes
  auto params = ParameterSet::init(g.num_nodes(), 4, 2, 1, 4, 32);
  Stage1Config cfg;
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  cfg.environments = 1;
  cfg.epochs = 5;
  cfg.learning_rate = 0.05;
  cfg.seed = 33;
  const auto res = train_scores(g, params, cfg);
  REQUIRE(res.log.size() == 5);
  for (std::size_t t = 1; t < res.log.size(); ++t)
    CHECK(res.log[t].objective < res.log[t - 1].objective);
  // With K = 1 and no penalty, the objective is exactly the single risk.
  for (const auto& row : res.log) CHECK(row.objective == row.mean_risk);
}

TEST_CASE("stage-1 training rejects zero epochs") {
  const auto g = testutil::random_graph(4, 4, 4, 35);
  const auto params = ParameterSet::init(g.num_nodes(), 3, 2, 1, 3, 36);
  Stage1Config cfg;
  cfg.epochs = 0;
  CHECK_THROWS(train_scores(g, params, cfg));
}

TEST_CASE("stage-1 training is bit-deterministic") {
  const auto g = testutil::random_graph(6, 8, 12, 37);
  const auto params = ParameterSet::init(g.num_nodes(), 4, 2, 1, 4, 38);
  Stage1Config cfg;
  cfg.epochs = 3;
  cfg.environments = 2;
  cfg.learning_rate = 0.01;
  cfg.seed = 39;
  const auto a = train_scores(g, params, cfg);
  const auto b = train_scores(g, params, cfg);
  CHECK(a.scores.values == b.scores.values);
  CHECK(a.params.flatten() == b.params.flatten());
}
