#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace invgcllm {

// Row-major dense matrix of 64-bit reals.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }

  void fill(double v) { values.assign(values.size(), v); }
  bool all_finite() const;
  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

  // this += scale * other (shapes must match)
  void add_scaled(const DenseMatrix& other, double scale);
  void scale(double s);
};

// Sparse matrix stored as (row, col, value) entries in sorted row-major
// order with no duplicates; accumulation over entries is therefore
// deterministic.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;

  struct Entry {
    std::uint32_t row;
    std::uint32_t col;
    double value;
  };

  std::vector<Entry> entries;

  // Sorts and validates: rejects duplicates, non-finite or zero weights,
  // and out-of-range indices.
  static SparseMatrix from_entries(std::size_t rows, std::size_t cols,
                                   std::vector<Entry> entries);
  static SparseMatrix identity(std::size_t n);

  bool is_symmetric() const;
};

// Exact sparse-dense product a * b with deterministic accumulation order.
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b);

// aᵀ * b, deterministic (scatter in entry order).
DenseMatrix spmm_transposed(const SparseMatrix& a, const DenseMatrix& b);

double dot(std::span<const double> u, std::span<const double> v);
double norm2(std::span<const double> u);

// u·v / (‖u‖‖v‖); returns 0 when either norm is below 1e-12.
double cosine_sim(std::span<const double> u, std::span<const double> v);

// d cos(u,v) / du and / dv, scaled by `coef`, accumulated into gu / gv.
// Zero contribution in the degenerate small-norm case (matches cosine_sim).
void cosine_sim_backward(std::span<const double> u, std::span<const double> v,
                         double coef, std::span<double> gu, std::span<double> gv);

}  // namespace invgcllm
