#include "hampdti/kernels/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <string>

#include "hampdti/error.hpp"

namespace hampdti::kernels {

namespace {

void check(bool ok, const char* op, std::size_t a, std::size_t b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": inner dimension mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

void reshape(Matrix& out, std::size_t rows, std::size_t cols) {
  out.rows = rows;
  out.cols = cols;
  out.data.assign(rows * cols, 0.0);
}

// Shared row bodies. The serial and parallel kernels both call these so the
// per-entry reduction order cannot drift apart.
inline void gemm_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  double* o = out.data.data() + i * out.cols;
  for (std::size_t k = 0; k < a.cols; ++k) {
    const double av = a(i, k);
    if (av == 0.0) continue;
    const double* br = b.data.data() + k * b.cols;
    for (std::size_t j = 0; j < b.cols; ++j) o[j] += av * br[j];
  }
}

inline void gemm_tn_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  double* o = out.data.data() + i * out.cols;
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double av = a(r, i);
    if (av == 0.0) continue;
    const double* br = b.data.data() + r * b.cols;
    for (std::size_t j = 0; j < b.cols; ++j) o[j] += av * br[j];
  }
}

inline void gemm_nt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const double* ar = a.data.data() + i * a.cols;
  for (std::size_t j = 0; j < b.rows; ++j) {
    const double* br = b.data.data() + j * b.cols;
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols; ++k) s += ar[k] * br[k];
    out(i, j) = s;
  }
}

inline void csr_dense_row(const CsrView& a, const Matrix& x, Matrix& out, std::size_t i) {
  double* o = out.data.data() + i * out.cols;
  for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
    const double v = a.values[p];
    const double* xr = x.data.data() + static_cast<std::size_t>(a.col_idx[p]) * x.cols;
    for (std::size_t j = 0; j < x.cols; ++j) o[j] += v * xr[j];
  }
}

inline void dense_csr_row(const Matrix& x, const CsrView& a, Matrix& out, std::size_t r) {
  double* o = out.data.data() + r * out.cols;
  for (std::size_t k = 0; k < x.cols; ++k) {
    const double xv = x(r, k);
    if (xv == 0.0) continue;
    for (std::size_t p = a.row_ptr[k]; p < a.row_ptr[k + 1]; ++p) o[a.col_idx[p]] += xv * a.values[p];
  }
}

// Row i of a*b into (cols, vals), columns ascending. `acc` and `mark` are
// scratch of length b.cols, left clean on return.
void csr_csr_row(const CsrView& a, const CsrView& b, std::size_t i, std::vector<double>& acc,
                 std::vector<char>& mark, std::vector<Index>& cols, std::vector<double>& vals) {
  cols.clear();
  vals.clear();
  for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
    const std::size_t k = a.col_idx[p];
    const double av = a.values[p];
    for (std::size_t q = b.row_ptr[k]; q < b.row_ptr[k + 1]; ++q) {
      const Index j = b.col_idx[q];
      if (!mark[j]) {
        mark[j] = 1;
        cols.push_back(j);
      }
      acc[j] += av * b.values[q];
    }
  }
  std::sort(cols.begin(), cols.end());
  vals.reserve(cols.size());
  for (Index j : cols) {
    vals.push_back(acc[j]);
    acc[j] = 0.0;
    mark[j] = 0;
  }
}

// Builds the transpose of a CSR view; entries of each output row are ordered
// by ascending source row.
CsrArrays transpose(const CsrView& a) {
  CsrArrays t;
  t.rows = a.cols;
  t.cols = a.rows;
  t.row_ptr.assign(a.cols + 1, 0);
  for (Index c : a.col_idx) ++t.row_ptr[c + 1];
  for (std::size_t c = 0; c < a.cols; ++c) t.row_ptr[c + 1] += t.row_ptr[c];
  t.col_idx.resize(a.col_idx.size());
  t.values.resize(a.values.size());
  std::vector<std::size_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      const std::size_t dst = next[a.col_idx[p]]++;
      t.col_idx[dst] = static_cast<Index>(r);
      t.values[dst] = a.values[p];
    }
  }
  return t;
}

CsrView view_of(const CsrArrays& c) { return {c.rows, c.cols, c.row_ptr, c.col_idx, c.values}; }

CsrArrays assemble(std::size_t rows, std::size_t cols, std::vector<std::vector<Index>>& rc,
                   std::vector<std::vector<double>>& rv) {
  CsrArrays out;
  out.rows = rows;
  out.cols = cols;
  out.row_ptr.assign(rows + 1, 0);
  for (std::size_t i = 0; i < rows; ++i) out.row_ptr[i + 1] = out.row_ptr[i] + rc[i].size();
  out.col_idx.reserve(out.row_ptr[rows]);
  out.values.reserve(out.row_ptr[rows]);
  for (std::size_t i = 0; i < rows; ++i) {
    out.col_idx.insert(out.col_idx.end(), rc[i].begin(), rc[i].end());
    out.values.insert(out.values.end(), rv[i].begin(), rv[i].end());
  }
  return out;
}

}  // namespace

void gemm(const Matrix& a, const Matrix& b, Matrix& out) {
  check(a.cols == b.rows, "gemm", a.cols, b.rows);
  reshape(out, a.rows, b.cols);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) gemm_row(a, b, out, static_cast<std::size_t>(i));
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  check(a.rows == b.rows, "gemm_tn", a.rows, b.rows);
  reshape(out, a.cols, b.cols);
  const auto n = static_cast<std::ptrdiff_t>(a.cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) gemm_tn_row(a, b, out, static_cast<std::size_t>(i));
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  check(a.cols == b.cols, "gemm_nt", a.cols, b.cols);
  reshape(out, a.rows, b.rows);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) gemm_nt_row(a, b, out, static_cast<std::size_t>(i));
}

void csr_dense(const CsrView& a, const Matrix& x, Matrix& out) {
  check(a.cols == x.rows, "csr_dense", a.cols, x.rows);
  reshape(out, a.rows, x.cols);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t i = 0; i < n; ++i) csr_dense_row(a, x, out, static_cast<std::size_t>(i));
}

void csr_t_dense(const CsrView& a, const Matrix& x, Matrix& out) {
  check(a.rows == x.rows, "csr_t_dense", a.rows, x.rows);
  const CsrArrays t = transpose(a);
  csr_dense(view_of(t), x, out);
}

void dense_csr(const Matrix& x, const CsrView& a, Matrix& out) {
  check(x.cols == a.rows, "dense_csr", x.cols, a.rows);
  reshape(out, x.rows, a.cols);
  const auto n = static_cast<std::ptrdiff_t>(x.rows);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t r = 0; r < n; ++r) dense_csr_row(x, a, out, static_cast<std::size_t>(r));
}

CsrArrays csr_csr(const CsrView& a, const CsrView& b) {
  check(a.cols == b.rows, "csr_csr", a.cols, b.rows);
  std::vector<std::vector<Index>> rc(a.rows);
  std::vector<std::vector<double>> rv(a.rows);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel
  {
    std::vector<double> acc(b.cols, 0.0);
    std::vector<char> mark(b.cols, 0);
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto row = static_cast<std::size_t>(i);
      csr_csr_row(a, b, row, acc, mark, rc[row], rv[row]);
    }
  }
  return assemble(a.rows, b.cols, rc, rv);
}

namespace serial {

void gemm(const Matrix& a, const Matrix& b, Matrix& out) {
  check(a.cols == b.rows, "gemm", a.cols, b.rows);
  reshape(out, a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) gemm_row(a, b, out, i);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  check(a.rows == b.rows, "gemm_tn", a.rows, b.rows);
  reshape(out, a.cols, b.cols);
  for (std::size_t i = 0; i < a.cols; ++i) gemm_tn_row(a, b, out, i);
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  check(a.cols == b.cols, "gemm_nt", a.cols, b.cols);
  reshape(out, a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) gemm_nt_row(a, b, out, i);
}

void csr_dense(const CsrView& a, const Matrix& x, Matrix& out) {
  check(a.cols == x.rows, "csr_dense", a.cols, x.rows);
  reshape(out, a.rows, x.cols);
  for (std::size_t i = 0; i < a.rows; ++i) csr_dense_row(a, x, out, i);
}

void csr_t_dense(const CsrView& a, const Matrix& x, Matrix& out) {
  check(a.rows == x.rows, "csr_t_dense", a.rows, x.rows);
  reshape(out, a.cols, x.cols);
  // scatter form; per output row the contributions arrive by ascending source row
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* xr = x.data.data() + r * x.cols;
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      double* o = out.data.data() + static_cast<std::size_t>(a.col_idx[p]) * out.cols;
      const double v = a.values[p];
      for (std::size_t j = 0; j < x.cols; ++j) o[j] += v * xr[j];
    }
  }
}

void dense_csr(const Matrix& x, const CsrView& a, Matrix& out) {
  check(x.cols == a.rows, "dense_csr", x.cols, a.rows);
  reshape(out, x.rows, a.cols);
  for (std::size_t r = 0; r < x.rows; ++r) dense_csr_row(x, a, out, r);
}

CsrArrays csr_csr(const CsrView& a, const CsrView& b) {
  check(a.cols == b.rows, "csr_csr", a.cols, b.rows);
  std::vector<std::vector<Index>> rc(a.rows);
  std::vector<std::vector<double>> rv(a.rows);
  std::vector<double> acc(b.cols, 0.0);
  std::vector<char> mark(b.cols, 0);
  for (std::size_t i = 0; i < a.rows; ++i) csr_csr_row(a, b, i, acc, mark, rc[i], rv[i]);
  return assemble(a.rows, b.cols, rc, rv);
}

}  // namespace serial

}  // namespace hampdti::kernels
