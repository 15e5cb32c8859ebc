#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "invgcllm/gradcheck.hpp"
#include "invgcllm/linalg.hpp"
#include "invgcllm/params.hpp"
#include "test_util.hpp"

using namespace invgcllm;

TEST_CASE("spmm identity and empty") {
  const auto b = testutil::random_matrix(5, 3, 1);
  const auto id = SparseMatrix::identity(5);
  const auto out = spmm(id, b);
  for (std::size_t i = 0; i < b.values.size(); ++i)
    CHECK(out.values[i] == doctest::Approx(b.values[i]));

  SparseMatrix empty;
  empty.rows = empty.cols = 5;
  const auto z = spmm(empty, b);
  for (double v : z.values) CHECK(v == 0.0);
}

TEST_CASE("spmm matches the dense oracle on random instances") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<SparseMatrix::Entry> entries;
    for (std::uint32_t r = 0; r < 8; ++r)
      for (std::uint32_t c = 0; c < 8; ++c)
        if (rng.uniform() < 0.3) entries.push_back({r, c, rng.normal()});
    const auto a = SparseMatrix::from_entries(8, 8, entries);
    const auto b = testutil::random_matrix(8, 4, 100 + trial);
    const auto got = spmm(a, b);
    const auto want = testutil::dense_mm(a, b);
    for (std::size_t i = 0; i < got.values.size(); ++i)
      CHECK(std::abs(got.values[i] - want.values[i]) < 1e-12);

    // Transposed product against the explicit transpose.
    std::vector<SparseMatrix::Entry> flipped;
    for (const auto& e : a.entries) flipped.push_back({e.col, e.row, e.value});
    const auto at = SparseMatrix::from_entries(8, 8, flipped);
    const auto got_t = spmm_transposed(a, b);
    const auto want_t = testutil::dense_mm(at, b);
    for (std::size_t i = 0; i < got_t.values.size(); ++i)
      CHECK(std::abs(got_t.values[i] - want_t.values[i]) < 1e-12);
  }
}

TEST_CASE("spmm is linear") {
  Rng rng(4);
  std::vector<SparseMatrix::Entry> entries;
  for (std::uint32_t r = 0; r < 6; ++r)
    for (std::uint32_t c = 0; c < 6; ++c)
      if (rng.uniform() < 0.4) entries.push_back({r, c, rng.normal()});
  const auto a = SparseMatrix::from_entries(6, 6, entries);
  const auto b = testutil::random_matrix(6, 3, 11);
  const auto c = testutil::random_matrix(6, 3, 12);
  const double alpha = 1.7;

  DenseMatrix combo = b;
  combo.scale(alpha);
  combo.add_scaled(c, 1.0);
  const auto lhs = spmm(a, combo);
  auto rhs = spmm(a, b);
  rhs.scale(alpha);
  rhs.add_scaled(spmm(a, c), 1.0);
  for (std::size_t i = 0; i < lhs.values.size(); ++i)
    CHECK(std::abs(lhs.values[i] - rhs.values[i]) < 1e-10);
}

TEST_CASE("sparse construction validates entries") {
  CHECK_THROWS(SparseMatrix::from_entries(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}));
  CHECK_THROWS(SparseMatrix::from_entries(2, 2, {{0, 0, 0.0}}));
  CHECK_THROWS(SparseMatrix::from_entries(2, 2, {{0, 5, 1.0}}));
}

TEST_CASE("cosine similarity") {
  std::vector<double> u = {1.0, 2.0, -3.0};
  CHECK(cosine_sim(u, u) == doctest::Approx(1.0));
  std::vector<double> a = {1.0, 0.0}, b = {0.0, 1.0};
  CHECK(cosine_sim(a, b) == doctest::Approx(0.0));
  std::vector<double> c = {1.0, 1.0};
  CHECK(std::abs(cosine_sim(a, c) - 0.70710678) < 1e-8);
  std::vector<double> z = {0.0, 0.0};
  CHECK(cosine_sim(a, z) == 0.0);
  std::vector<double> short_vec = {1.0};
  CHECK_THROWS(cosine_sim(a, short_vec));
}

TEST_CASE("finite differences confirm a quadratic gradient") {
  std::vector<double> p = {0.5, -1.25, 2.0, 0.0, 3.5};
  const auto loss = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += 0.5 * v * v;
    return s;
  };
  CHECK(finite_diff_check(loss, p, p) < 1e-8);

  const std::vector<double> zeros(p.size(), 0.0);
  const auto constant = [](std::span<const double>) { return 3.0; };
  CHECK(finite_diff_check(constant, p, zeros) == 0.0);

  std::vector<double> corrupted = p;
  corrupted[2] += 1.0;
  CHECK(finite_diff_check(loss, p, corrupted) > 1e-2);
}

TEST_CASE("finite_diff_check flags non-finite losses with the coordinate") {
  std::vector<double> p = {1.0, 2.0};
  const auto bad = [](std::span<const double> x) {
    return x[1] > 2.0 ? std::nan("") : x[0];
  };
  try {
    finite_diff_check(bad, p, p);
    FAIL("expected failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("coordinate 1") != std::string::npos);
  }
}

TEST_CASE("parameter flattening round-trips and orders stage-1 last") {
  auto p = ParameterSet::init(7, 4, 3, 1, 4, 99);
  const auto flat = p.flatten();
  CHECK(flat.size() == p.flat_size());
  CHECK(p.stage1_offset() == 7 * 4);
  CHECK(p.stage1_size() == flat.size() - 28);

  ParameterSet q = p;
  for (double& v : q.embedding.values) v = 0.0;
  q.unflatten(flat);
  CHECK(q.flatten() == flat);

  auto s1 = p.stage1_flatten();
  s1[0] += 1.0;
  p.stage1_unflatten(s1);
  CHECK(p.mask_embedding.values[0] == doctest::Approx(s1[0]));
  CHECK(p.stage1_flatten() == s1);
}

TEST_CASE("checkpoints round-trip bit-exactly and are byte-deterministic") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "invgcllm_ckpt_test";
  fs::create_directories(dir);
  const auto path1 = (dir / "a.ckpt").string();
  const auto path2 = (dir / "b.ckpt").string();

  const auto p = ParameterSet::init(9, 5, 2, 1, 6, 1234);
  save_checkpoint(p, path1);
  save_checkpoint(p, path2);

  const auto q = load_checkpoint(path1);
  CHECK(q.flatten() == p.flatten());
  CHECK(q.dim == p.dim);
  CHECK(q.layers == p.layers);
  CHECK(q.mask_layers == p.mask_layers);

  std::ifstream f1(path1, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  CHECK(!b1.empty());
  fs::remove_all(dir);
}
