#pragma once

// Numeric kernels used by the sparse adjacency algebra and the tensor engine.
//
// Every kernel exists twice: the default OpenMP version parallelizes over
// output rows, and `serial::` keeps a plain single-threaded reference used by
// tests and the benchmark. Both reduce each output entry in the same fixed
// order, so their results are bitwise identical for the same input.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hampdti/matrix.hpp"

namespace hampdti::kernels {

using Index = std::uint32_t;

// Non-owning CSR view.
struct CsrView {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const std::size_t> row_ptr;
  std::span<const Index> col_idx;
  std::span<const double> values;
};

// Owning CSR arrays, output of sparse-sparse products.
struct CsrArrays {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<Index> col_idx;
  std::vector<double> values;
};

// out = a * b
void gemm(const Matrix& a, const Matrix& b, Matrix& out);
// out = a^T * b
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);
// out = a * b^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);
// out = sparse * dense
void csr_dense(const CsrView& a, const Matrix& x, Matrix& out);
// out = sparse^T * dense
void csr_t_dense(const CsrView& a, const Matrix& x, Matrix& out);
// out = dense * sparse
void dense_csr(const Matrix& x, const CsrView& a, Matrix& out);
// Gustavson row-by-row sparse product; columns sorted per row.
CsrArrays csr_csr(const CsrView& a, const CsrView& b);

namespace serial {
void gemm(const Matrix& a, const Matrix& b, Matrix& out);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);
void csr_dense(const CsrView& a, const Matrix& x, Matrix& out);
void csr_t_dense(const CsrView& a, const Matrix& x, Matrix& out);
void dense_csr(const Matrix& x, const CsrView& a, Matrix& out);
CsrArrays csr_csr(const CsrView& a, const CsrView& b);
}  // namespace serial

}  // namespace hampdti::kernels
