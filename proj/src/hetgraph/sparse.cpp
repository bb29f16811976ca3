#include "hampdti/hetgraph/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hampdti/error.hpp"

namespace hampdti {

SparseMatrix::SparseMatrix(std::size_t n_rows, std::size_t n_cols)
    : n_rows_(n_rows), n_cols_(n_cols), row_ptr_(n_rows + 1, 0) {}

SparseMatrix::SparseMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_ptr,
                           std::vector<Index> col_idx, std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  validate();
}

SparseMatrix::SparseMatrix(kernels::CsrArrays arrays)
    : SparseMatrix(arrays.rows, arrays.cols, std::move(arrays.row_ptr), std::move(arrays.col_idx),
                   std::move(arrays.values)) {}

void SparseMatrix::validate() const {
  if (n_cols_ > std::numeric_limits<Index>::max()) throw ShapeError("sparse matrix too wide");
  if (row_ptr_.size() != n_rows_ + 1 || row_ptr_.front() != 0) throw ShapeError("bad row_ptr length");
  if (col_idx_.size() != values_.size() || row_ptr_.back() != values_.size()) {
    throw ShapeError("row_ptr[n_rows] must equal nnz");
  }
  for (std::size_t r = 0; r < n_rows_; ++r) {
    if (row_ptr_[r] > row_ptr_[r + 1]) throw ShapeError("row_ptr not monotone at row " + std::to_string(r));
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      if (col_idx_[p] >= n_cols_) throw ShapeError("column index out of range in row " + std::to_string(r));
      if (p > row_ptr_[r] && col_idx_[p] <= col_idx_[p - 1]) {
        throw ShapeError("columns not sorted/unique in row " + std::to_string(r));
      }
      if (!(values_[p] >= 0.0) || !std::isfinite(values_[p])) {
        throw NumericError("sparse values must be finite and nonnegative (row " + std::to_string(r) + ")");
      }
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= n_rows || t.col >= n_cols) {
      throw ShapeError("triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) + ") outside " +
                       std::to_string(n_rows) + "x" + std::to_string(n_cols));
    }
  }
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  std::vector<std::size_t> row_ptr(n_rows + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(triplets.size());
  vals.reserve(triplets.size());
  std::size_t last_row = n_rows;
  for (const auto& t : triplets) {
    if (t.row == last_row && !cols.empty() && cols.back() == t.col) {
      vals.back() += t.value;
      continue;
    }
    cols.push_back(static_cast<Index>(t.col));
    vals.push_back(t.value);
    ++row_ptr[t.row + 1];
    last_row = t.row;
  }
  for (std::size_t r = 0; r < n_rows; ++r) row_ptr[r + 1] += row_ptr[r];
  return {n_rows, n_cols, std::move(row_ptr), std::move(cols), std::move(vals)};
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
  std::vector<std::size_t> row_ptr(dense.rows + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  for (std::size_t r = 0; r < dense.rows; ++r) {
    for (std::size_t c = 0; c < dense.cols; ++c) {
      if (dense(r, c) != 0.0) {
        cols.push_back(static_cast<Index>(c));
        vals.push_back(dense(r, c));
      }
    }
    row_ptr[r + 1] = cols.size();
  }
  return {dense.rows, dense.cols, std::move(row_ptr), std::move(cols), std::move(vals)};
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> row_ptr(n + 1);
  std::vector<Index> cols(n);
  for (std::size_t i = 0; i <= n; ++i) row_ptr[i] = i;
  for (std::size_t i = 0; i < n; ++i) cols[i] = static_cast<Index>(i);
  return {n, n, std::move(row_ptr), std::move(cols), std::vector<double>(n, 1.0)};
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  if (r >= n_rows_ || c >= n_cols_) throw ShapeError("SparseMatrix::at out of range");
  const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
  const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
  const auto it = std::lower_bound(first, last, static_cast<Index>(c));
  if (it == last || *it != c) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> row_ptr(n_cols_ + 1, 0);
  for (Index c : col_idx_) ++row_ptr[c + 1];
  for (std::size_t c = 0; c < n_cols_; ++c) row_ptr[c + 1] += row_ptr[c];
  std::vector<Index> cols(nnz());
  std::vector<double> vals(nnz());
  std::vector<std::size_t> next(row_ptr.begin(), row_ptr.end() - 1);
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const std::size_t dst = next[col_idx_[p]]++;
      cols[dst] = static_cast<Index>(r);
      vals[dst] = values_[p];
    }
  }
  return {n_cols_, n_rows_, std::move(row_ptr), std::move(cols), std::move(vals)};
}

Matrix SparseMatrix::to_dense() const { return dense_block(0, n_rows_, 0, n_cols_); }

Matrix SparseMatrix::dense_block(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) const {
  if (r0 > r1 || r1 > n_rows_ || c0 > c1 || c1 > n_cols_) throw ShapeError("dense_block window out of range");
  Matrix out(r1 - r0, c1 - c0);
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const std::size_t c = col_idx_[p];
      if (c >= c0 && c < c1) out(r - r0, c - c0) = values_[p];
    }
  }
  return out;
}

SparseMatrix SparseMatrix::scaled(double factor) const {
  if (!(factor >= 0.0)) throw NumericError("SparseMatrix::scaled needs a nonnegative factor");
  SparseMatrix out = *this;
  for (double& v : out.values_) v *= factor;
  return out;
}

SparseMatrix SparseMatrix::pruned() const {
  std::vector<std::size_t> row_ptr(n_rows_ + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      if (values_[p] != 0.0) {
        cols.push_back(col_idx_[p]);
        vals.push_back(values_[p]);
      }
    }
    row_ptr[r + 1] = cols.size();
  }
  return {n_rows_, n_cols_, std::move(row_ptr), std::move(cols), std::move(vals)};
}

bool SparseMatrix::is_symmetric() const { return n_rows_ == n_cols_ && transpose() == *this; }

SparseMatrix spmm(const SparseMatrix& a, const SparseMatrix& b) {
  return SparseMatrix(kernels::csr_csr(a.view(), b.view()));
}

Matrix spmm_dense(const SparseMatrix& a, const Matrix& x) {
  Matrix out;
  kernels::csr_dense(a.view(), x, out);
  return out;
}

SparseMatrix sym_normalize(const SparseMatrix& a, bool add_self_loops) {
  if (a.n_rows() != a.n_cols()) throw ShapeError("sym_normalize needs a square matrix");
  const std::size_t n = a.n_rows();
  const SparseMatrix base =
      add_self_loops ? linear_combination(std::vector<const SparseMatrix*>{&a, nullptr}, std::vector<double>{1.0, 1.0})
                     : a;
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double deg = 0.0;
    for (std::size_t p = base.row_ptr()[r]; p < base.row_ptr()[r + 1]; ++p) deg += base.values()[p];
    inv_sqrt[r] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  std::vector<double> vals(base.values().begin(), base.values().end());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t p = base.row_ptr()[r]; p < base.row_ptr()[r + 1]; ++p) {
      vals[p] *= inv_sqrt[r] * inv_sqrt[base.col_idx()[p]];
    }
  }
  return {n, n, std::vector<std::size_t>(base.row_ptr().begin(), base.row_ptr().end()),
          std::vector<SparseMatrix::Index>(base.col_idx().begin(), base.col_idx().end()), std::move(vals)};
}

// A null entry in `mats` stands for the identity of matching size.
SparseMatrix linear_combination(std::span<const SparseMatrix* const> mats, std::span<const double> weights) {
  if (mats.size() != weights.size()) throw ShapeError("linear_combination: weights/matrices length mismatch");
  std::size_t rows = 0, cols = 0;
  bool sized = false;
  for (const SparseMatrix* m : mats) {
    if (m == nullptr) continue;
    if (!sized) {
      rows = m->n_rows();
      cols = m->n_cols();
      sized = true;
    } else if (m->n_rows() != rows || m->n_cols() != cols) {
      throw ShapeError("linear_combination: shape mismatch");
    }
  }
  if (!sized) throw ShapeError("linear_combination: need at least one explicit matrix");
  for (double w : weights) {
    if (!(w >= 0.0)) throw NumericError("linear_combination: weights must be nonnegative");
  }
  const SparseMatrix eye = SparseMatrix::identity(rows);
  std::vector<std::size_t> row_ptr(rows + 1, 0);
  std::vector<SparseMatrix::Index> out_cols;
  std::vector<double> out_vals;
  std::vector<double> acc(cols, 0.0);
  std::vector<char> mark(cols, 0);
  std::vector<SparseMatrix::Index> touched;
  for (std::size_t r = 0; r < rows; ++r) {
    touched.clear();
    for (std::size_t k = 0; k < mats.size(); ++k) {
      const SparseMatrix& m = mats[k] ? *mats[k] : eye;
      for (std::size_t p = m.row_ptr()[r]; p < m.row_ptr()[r + 1]; ++p) {
        const auto c = m.col_idx()[p];
        if (!mark[c]) {
          mark[c] = 1;
          touched.push_back(c);
        }
        acc[c] += weights[k] * m.values()[p];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (auto c : touched) {
      out_cols.push_back(c);
      out_vals.push_back(acc[c]);
      acc[c] = 0.0;
      mark[c] = 0;
    }
    row_ptr[r + 1] = out_cols.size();
  }
  return {rows, cols, std::move(row_ptr), std::move(out_cols), std::move(out_vals)};
}

SparseMatrix bipartite_lift(const Matrix& block) {
  const std::size_t m = block.rows, n = block.cols, size = m + n;
  std::vector<std::size_t> row_ptr(size + 1, 0);
  std::vector<SparseMatrix::Index> cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (block(i, j) != 0.0) {
        cols.push_back(static_cast<SparseMatrix::Index>(m + j));
        vals.push_back(block(i, j));
      }
    }
    row_ptr[i + 1] = cols.size();
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      if (block(i, j) != 0.0) {
        cols.push_back(static_cast<SparseMatrix::Index>(i));
        vals.push_back(block(i, j));
      }
    }
    row_ptr[m + j + 1] = cols.size();
  }
  return {size, size, std::move(row_ptr), std::move(cols), std::move(vals)};
}

}  // namespace hampdti
