#include "invgcllm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace invgcllm {

bool DenseMatrix::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void DenseMatrix::add_scaled(const DenseMatrix& other, double scale) {
  if (!same_shape(other)) throw std::invalid_argument("add_scaled: shape mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += scale * other.values[i];
}

void DenseMatrix::scale(double s) {
  for (double& v : values) v *= s;
}

SparseMatrix SparseMatrix::from_entries(std::size_t rows, std::size_t cols,
                                        std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Entry& e = entries[i];
    if (e.row >= rows || e.col >= cols)
      throw std::invalid_argument("SparseMatrix: entry index out of range");
    if (!std::isfinite(e.value) || e.value == 0.0)
      throw std::invalid_argument("SparseMatrix: weights must be finite and non-zero");
    if (i > 0 && entries[i - 1].row == e.row && entries[i - 1].col == e.col)
      throw std::invalid_argument("SparseMatrix: duplicate (row, col) entry");
  }
  SparseMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.entries = std::move(entries);
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Entry> es;
  es.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    es.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), 1.0});
  return from_entries(n, n, std::move(es));
}

bool SparseMatrix::is_symmetric() const {
  if (rows != cols) return false;
  std::vector<Entry> flipped = entries;
  for (Entry& e : flipped) std::swap(e.row, e.col);
  std::sort(flipped.begin(), flipped.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (flipped[i].row != entries[i].row || flipped[i].col != entries[i].col ||
        flipped[i].value != entries[i].value)
      return false;
  }
  return true;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("spmm: shape mismatch");
  DenseMatrix out(a.rows, b.cols);
  for (const auto& e : a.entries) {
    const double* src = b.values.data() + static_cast<std::size_t>(e.col) * b.cols;
    double* dst = out.values.data() + static_cast<std::size_t>(e.row) * b.cols;
    for (std::size_t c = 0; c < b.cols; ++c) dst[c] += e.value * src[c];
  }
  return out;
}

DenseMatrix spmm_transposed(const SparseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows) throw std::invalid_argument("spmm_transposed: shape mismatch");
  DenseMatrix out(a.cols, b.cols);
  for (const auto& e : a.entries) {
    const double* src = b.values.data() + static_cast<std::size_t>(e.row) * b.cols;
    double* dst = out.values.data() + static_cast<std::size_t>(e.col) * b.cols;
    for (std::size_t c = 0; c < b.cols; ++c) dst[c] += e.value * src[c];
  }
  return out;
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double norm2(std::span<const double> u) { return std::sqrt(dot(u, u)); }

namespace {
constexpr double kNormFloor = 1e-12;
}

double cosine_sim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine_sim: dimension mismatch");
  const double nu = norm2(u);
  const double nv = norm2(v);
  if (nu < kNormFloor || nv < kNormFloor) return 0.0;
  return dot(u, v) / (nu * nv);
}

void cosine_sim_backward(std::span<const double> u, std::span<const double> v,
                         double coef, std::span<double> gu, std::span<double> gv) {
  const double nu = norm2(u);
  const double nv = norm2(v);
  if (nu < kNormFloor || nv < kNormFloor) return;
  const double d = dot(u, v);
  const double inv = 1.0 / (nu * nv);
  const double s = d * inv;
  // d cos / du = v/(|u||v|) - cos * u/|u|^2
  for (std::size_t i = 0; i < u.size(); ++i) {
    gu[i] += coef * (v[i] * inv - s * u[i] / (nu * nu));
    gv[i] += coef * (u[i] * inv - s * v[i] / (nv * nv));
  }
}

}  // namespace invgcllm
