#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hampdti/kernels/kernels.hpp"
#include "hampdti/matrix.hpp"

namespace hampdti {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

// CSR matrix with nonnegative values. Column indices are sorted and unique
// within each row; the constructor rejects anything else.
class SparseMatrix {
 public:
  using Index = kernels::Index;

  SparseMatrix() = default;
  SparseMatrix(std::size_t n_rows, std::size_t n_cols);
  SparseMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_ptr,
               std::vector<Index> col_idx, std::vector<double> values);
  explicit SparseMatrix(kernels::CsrArrays arrays);

  // Duplicate coordinates are summed.
  static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols, std::vector<Triplet> triplets);
  static SparseMatrix from_dense(const Matrix& dense);
  static SparseMatrix identity(std::size_t n);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const Index> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  kernels::CsrView view() const noexcept { return {n_rows_, n_cols_, row_ptr_, col_idx_, values_}; }

  // Entry lookup by binary search; 0 when absent.
  double at(std::size_t r, std::size_t c) const;

  SparseMatrix transpose() const;
  Matrix to_dense() const;
  SparseMatrix scaled(double factor) const;
  // Drops stored entries equal to zero.
  SparseMatrix pruned() const;
  bool is_symmetric() const;

  // Rows [r0, r1) x cols [c0, c1) as a dense block.
  Matrix dense_block(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  void validate() const;

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

// Exact sparse product a*b.
SparseMatrix spmm(const SparseMatrix& a, const SparseMatrix& b);

// Sparse times dense; each output row is reduced sequentially in stored order.
Matrix spmm_dense(const SparseMatrix& a, const Matrix& x);

// D^{-1/2} (A [+ I]) D^{-1/2}. Zero-degree rows stay empty.
SparseMatrix sym_normalize(const SparseMatrix& a, bool add_self_loops);

// sum_k weights[k] * mats[k]; sparsity pattern is the union of the inputs.
SparseMatrix linear_combination(std::span<const SparseMatrix* const> mats, std::span<const double> weights);

// [[0, block], [block^T, 0]] for an m x n dense block.
SparseMatrix bipartite_lift(const Matrix& block);

}  // namespace hampdti
