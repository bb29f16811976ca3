#include "doctest.h"
#include "hampdti/error.hpp"
#include "hampdti/kernels/kernels.hpp"
#include "test_util.hpp"

using namespace hampdti;
using namespace testutil;

TEST_CASE("parallel kernels are bitwise equal to the serial reference") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = random_dense(17, 23, rng);
    const Matrix b = random_dense(23, 9, rng);
    const Matrix c = random_dense(17, 9, rng);
    Matrix p, s;
    kernels::gemm(a, b, p);
    kernels::serial::gemm(a, b, s);
    CHECK(p == s);
    kernels::gemm_tn(a, c, p);
    kernels::serial::gemm_tn(a, c, s);
    CHECK(p == s);
    kernels::gemm_nt(a, a, p);
    kernels::serial::gemm_nt(a, a, s);
    CHECK(p == s);

    const SparseMatrix sp = SparseMatrix::from_dense(random_nonneg_sparse_dense(23, 23, 0.2, rng));
    const Matrix x = random_dense(23, 5, rng);
    kernels::csr_dense(sp.view(), x, p);
    kernels::serial::csr_dense(sp.view(), x, s);
    CHECK(p == s);
    kernels::csr_t_dense(sp.view(), x, p);
    kernels::serial::csr_t_dense(sp.view(), x, s);
    CHECK(p == s);
    kernels::dense_csr(b.transposed(), sp.view(), p);
    kernels::serial::dense_csr(b.transposed(), sp.view(), s);
    CHECK(p == s);

    const auto pp = kernels::csr_csr(sp.view(), sp.view());
    const auto ss = kernels::serial::csr_csr(sp.view(), sp.view());
    CHECK(pp.row_ptr == ss.row_ptr);
    CHECK(pp.col_idx == ss.col_idx);
    CHECK(pp.values == ss.values);
  }
}

TEST_CASE("dense kernels match the triple loop") {
  Rng rng(11);
  const Matrix a = random_dense(6, 4, rng), b = random_dense(4, 5, rng);
  Matrix out;
  kernels::gemm(a, b, out);
  CHECK(max_abs_diff(out, naive_matmul(a, b)) < 1e-12);
  kernels::gemm_tn(a.transposed(), b, out);
  CHECK(max_abs_diff(out, naive_matmul(a, b)) < 1e-12);
  kernels::gemm_nt(a, b.transposed(), out);
  CHECK(max_abs_diff(out, naive_matmul(a, b)) < 1e-12);
}

TEST_CASE("kernel dimension mismatch throws") {
  Matrix a(2, 3), b(2, 3), out;
  CHECK_THROWS_AS(kernels::gemm(a, b, out), ShapeError);
  CHECK_THROWS_AS(kernels::serial::gemm(a, b, out), ShapeError);
}
