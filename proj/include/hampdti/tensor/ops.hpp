#pragma once

#include <memory>
#include <vector>

#include "hampdti/hetgraph/sparse.hpp"
#include "hampdti/tensor/tensor.hpp"

// Differentiable primitives. Each op records a tape node only when one of its
// inputs requires a gradient, and throws NumericError if its output is not
// finite.
namespace hampdti::tensor {

enum class Activation { identity, relu, sigmoid };

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
// a * b^T
Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& a);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
Tensor add_scalar(Tape& tape, const Tensor& a, double value);
// a (r x c) + bias (1 x c) broadcast over rows
Tensor add_row_broadcast(Tape& tape, const Tensor& a, const Tensor& bias);

Tensor relu(Tape& tape, const Tensor& a);
Tensor sigmoid(Tape& tape, const Tensor& a);
Tensor activate(Tape& tape, const Tensor& a, Activation act);
// elementwise a^{-1/2}; a must be strictly positive
Tensor inv_sqrt(Tape& tape, const Tensor& a);

// Softmax over all entries of a vector-shaped tensor (K x 1 or 1 x K), with
// max-subtraction.
Tensor softmax_vector(Tape& tape, const Tensor& logits);
// Column-wise maximum over rows: (r x c) -> (1 x c). Ties go to the first row.
Tensor row_max_pool(Tape& tape, const Tensor& a);

// (r x c) -> (r x 1)
Tensor row_sums(Tape& tape, const Tensor& a);
// (r x c) -> (c x 1)
Tensor col_sums(Tape& tape, const Tensor& a);
// diag(v) * a, v is (r x 1)
Tensor scale_rows(Tape& tape, const Tensor& a, const Tensor& v);
// a * diag(v), v is (c x 1)
Tensor scale_cols(Tape& tape, const Tensor& a, const Tensor& v);

Tensor sum(Tape& tape, const Tensor& a);
Tensor sum_squares(Tape& tape, const Tensor& a);

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts);
Tensor slice_rows(Tape& tape, const Tensor& a, std::size_t begin, std::size_t end);

// sum_k weights[k] * items[k]; weights is (K x 1).
Tensor weighted_sum(Tape& tape, const std::vector<Tensor>& items, const Tensor& weights);

// Constant sparse matrix times a tensor.
Tensor spmm_dense_diff(Tape& tape, std::shared_ptr<const SparseMatrix> a, const Tensor& x);

// sum over mask != 0 of (1-g)(Y (Y - P))^2 + g((1 - Y)(Y - P))^2
Tensor masked_weighted_sq_loss(Tape& tape, const Tensor& pred, const Matrix& target, const Matrix& mask,
                               double gamma);

}  // namespace hampdti::tensor
