#include "hampdti/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hampdti/error.hpp"
#include "hampdti/kernels/kernels.hpp"

namespace hampdti::tensor {

namespace {

using Backward = std::function<void(const Matrix& grad_out)>;

std::string shape_str(const Matrix& m) { return std::to_string(m.rows) + "x" + std::to_string(m.cols); }

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op) + ": " + detail);
}

Tensor finish(Tape& tape, const char* op, Matrix value, const std::vector<Tensor>& inputs, Backward bw) {
  if (!value.all_finite()) throw NumericError(std::string("op '") + op + "' produced non-finite values");
  bool needs = false;
  for (const auto& t : inputs) needs = needs || t.requires_grad();
  Tensor out = Tensor::intermediate(std::move(value), needs, op);
  if (needs) {
    Node* o = out.node();
    tape.record(op, inputs, out, [o, bw = std::move(bw)] { bw(o->grad); });
  }
  return out;
}

void push(const Tensor& t, const Matrix& g) {
  if (t.requires_grad()) t.node()->accumulate(g);
}

bool is_vector(const Matrix& m) { return m.rows == 1 || m.cols == 1; }

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul", shape_str(a.value()) + " * " + shape_str(b.value()));
  Matrix out;
  kernels::gemm(a.value(), b.value(), out);
  return finish(tape, "matmul", std::move(out), {a, b}, [a, b](const Matrix& g) {
    if (a.requires_grad()) {
      Matrix ga;
      kernels::gemm_nt(g, b.value(), ga);
      push(a, ga);
    }
    if (b.requires_grad()) {
      Matrix gb;
      kernels::gemm_tn(a.value(), g, gb);
      push(b, gb);
    }
  });
}

Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.cols() == b.cols(), "matmul_nt", shape_str(a.value()) + " * " + shape_str(b.value()) + "^T");
  Matrix out;
  kernels::gemm_nt(a.value(), b.value(), out);
  return finish(tape, "matmul_nt", std::move(out), {a, b}, [a, b](const Matrix& g) {
    if (a.requires_grad()) {
      Matrix ga;
      kernels::gemm(g, b.value(), ga);
      push(a, ga);
    }
    if (b.requires_grad()) {
      Matrix gb;
      kernels::gemm_tn(g, a.value(), gb);
      push(b, gb);
    }
  });
}

Tensor transpose(Tape& tape, const Tensor& a) {
  return finish(tape, "transpose", a.value().transposed(), {a},
                [a](const Matrix& g) { push(a, g.transposed()); });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.value().same_shape(b.value()), "add", shape_str(a.value()) + " vs " + shape_str(b.value()));
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.value().data[i];
  return finish(tape, "add", std::move(out), {a, b}, [a, b](const Matrix& g) {
    push(a, g);
    push(b, g);
  });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.value().same_shape(b.value()), "sub", shape_str(a.value()) + " vs " + shape_str(b.value()));
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.value().data[i];
  return finish(tape, "sub", std::move(out), {a, b}, [a, b](const Matrix& g) {
    push(a, g);
    if (b.requires_grad()) {
      Matrix gb = g;
      for (double& v : gb.data) v = -v;
      push(b, gb);
    }
  });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.value().same_shape(b.value()), "mul", shape_str(a.value()) + " vs " + shape_str(b.value()));
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.value().data[i];
  return finish(tape, "mul", std::move(out), {a, b}, [a, b](const Matrix& g) {
    if (a.requires_grad()) {
      Matrix ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] *= b.value().data[i];
      push(a, ga);
    }
    if (b.requires_grad()) {
      Matrix gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] *= a.value().data[i];
      push(b, gb);
    }
  });
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  Matrix out = a.value();
  for (double& v : out.data) v *= factor;
  return finish(tape, "scale", std::move(out), {a}, [a, factor](const Matrix& g) {
    Matrix ga = g;
    for (double& v : ga.data) v *= factor;
    push(a, ga);
  });
}

Tensor add_scalar(Tape& tape, const Tensor& a, double value) {
  Matrix out = a.value();
  for (double& v : out.data) v += value;
  return finish(tape, "add_scalar", std::move(out), {a}, [a](const Matrix& g) { push(a, g); });
}

Tensor add_row_broadcast(Tape& tape, const Tensor& a, const Tensor& bias) {
  require(bias.rows() == 1 && bias.cols() == a.cols(), "add_row_broadcast",
          shape_str(a.value()) + " + " + shape_str(bias.value()));
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) += bias.value()(0, c);
  return finish(tape, "add_row_broadcast", std::move(out), {a, bias}, [a, bias](const Matrix& g) {
    push(a, g);
    if (bias.requires_grad()) {
      Matrix gb(1, g.cols);
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) gb(0, c) += g(r, c);
      push(bias, gb);
    }
  });
}

Tensor relu(Tape& tape, const Tensor& a) {
  Matrix out = a.value();
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return finish(tape, "relu", std::move(out), {a}, [a](const Matrix& g) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (!(a.value().data[i] > 0.0)) ga.data[i] = 0.0;
    }
    push(a, ga);
  });
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  Matrix out = a.value();
  for (double& v : out.data) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  Matrix y = out;
  return finish(tape, "sigmoid", std::move(out), {a}, [a, y = std::move(y)](const Matrix& g) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] *= y.data[i] * (1.0 - y.data[i]);
    push(a, ga);
  });
}

Tensor activate(Tape& tape, const Tensor& a, Activation act) {
  switch (act) {
    case Activation::relu:
      return relu(tape, a);
    case Activation::sigmoid:
      return sigmoid(tape, a);
    case Activation::identity:
      break;
  }
  return a;
}

Tensor inv_sqrt(Tape& tape, const Tensor& a) {
  Matrix out = a.value();
  for (double& v : out.data) {
    if (!(v > 0.0)) throw NumericError("op 'inv_sqrt' needs strictly positive input");
    v = 1.0 / std::sqrt(v);
  }
  Matrix y = out;
  return finish(tape, "inv_sqrt", std::move(out), {a}, [a, y = std::move(y)](const Matrix& g) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] *= -0.5 * y.data[i] * y.data[i] * y.data[i];
    push(a, ga);
  });
}

Tensor softmax_vector(Tape& tape, const Tensor& logits) {
  require(is_vector(logits.value()) && logits.value().size() > 0, "softmax_vector",
          "expects a non-empty vector, got " + shape_str(logits.value()));
  Matrix out = logits.value();
  const double mx = *std::max_element(out.data.begin(), out.data.end());
  double z = 0.0;
  for (double& v : out.data) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : out.data) v /= z;
  Matrix y = out;
  return finish(tape, "softmax_vector", std::move(out), {logits}, [logits, y = std::move(y)](const Matrix& g) {
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += g.data[i] * y.data[i];
    Matrix gl = g;
    for (std::size_t i = 0; i < y.size(); ++i) gl.data[i] = y.data[i] * (g.data[i] - dot);
    push(logits, gl);
  });
}

Tensor row_max_pool(Tape& tape, const Tensor& a) {
  require(a.rows() > 0, "row_max_pool", "needs at least one row");
  const Matrix& v = a.value();
  Matrix out(1, v.cols);
  std::vector<std::size_t> arg(v.cols, 0);
  for (std::size_t c = 0; c < v.cols; ++c) {
    double best = v(0, c);
    for (std::size_t r = 1; r < v.rows; ++r) {
      if (v(r, c) > best) {
        best = v(r, c);
        arg[c] = r;
      }
    }
    out(0, c) = best;
  }
  return finish(tape, "row_max_pool", std::move(out), {a}, [a, arg = std::move(arg)](const Matrix& g) {
    Matrix ga(a.rows(), a.cols());
    for (std::size_t c = 0; c < ga.cols; ++c) ga(arg[c], c) = g(0, c);
    push(a, ga);
  });
}

Tensor row_sums(Tape& tape, const Tensor& a) {
  const Matrix& v = a.value();
  Matrix out(v.rows, 1);
  for (std::size_t r = 0; r < v.rows; ++r) {
    double s = 0.0;
    for (double x : v.row(r)) s += x;
    out(r, 0) = s;
  }
  return finish(tape, "row_sums", std::move(out), {a}, [a](const Matrix& g) {
    Matrix ga(a.rows(), a.cols());
    for (std::size_t r = 0; r < ga.rows; ++r)
      for (std::size_t c = 0; c < ga.cols; ++c) ga(r, c) = g(r, 0);
    push(a, ga);
  });
}

Tensor col_sums(Tape& tape, const Tensor& a) {
  const Matrix& v = a.value();
  Matrix out(v.cols, 1);
  for (std::size_t r = 0; r < v.rows; ++r)
    for (std::size_t c = 0; c < v.cols; ++c) out(c, 0) += v(r, c);
  return finish(tape, "col_sums", std::move(out), {a}, [a](const Matrix& g) {
    Matrix ga(a.rows(), a.cols());
    for (std::size_t r = 0; r < ga.rows; ++r)
      for (std::size_t c = 0; c < ga.cols; ++c) ga(r, c) = g(c, 0);
    push(a, ga);
  });
}

Tensor scale_rows(Tape& tape, const Tensor& a, const Tensor& v) {
  require(v.rows() == a.rows() && v.cols() == 1, "scale_rows", shape_str(a.value()) + " by " + shape_str(v.value()));
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows; ++r)
    for (double& x : out.row(r)) x *= v.value()(r, 0);
  return finish(tape, "scale_rows", std::move(out), {a, v}, [a, v](const Matrix& g) {
    if (a.requires_grad()) {
      Matrix ga = g;
      for (std::size_t r = 0; r < ga.rows; ++r)
        for (double& x : ga.row(r)) x *= v.value()(r, 0);
      push(a, ga);
    }
    if (v.requires_grad()) {
      Matrix gv(v.rows(), 1);
      for (std::size_t r = 0; r < g.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < g.cols; ++c) s += g(r, c) * a.value()(r, c);
        gv(r, 0) = s;
      }
      push(v, gv);
    }
  });
}

Tensor scale_cols(Tape& tape, const Tensor& a, const Tensor& v) {
  require(v.rows() == a.cols() && v.cols() == 1, "scale_cols", shape_str(a.value()) + " by " + shape_str(v.value()));
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) *= v.value()(c, 0);
  return finish(tape, "scale_cols", std::move(out), {a, v}, [a, v](const Matrix& g) {
    if (a.requires_grad()) {
      Matrix ga = g;
      for (std::size_t r = 0; r < ga.rows; ++r)
        for (std::size_t c = 0; c < ga.cols; ++c) ga(r, c) *= v.value()(c, 0);
      push(a, ga);
    }
    if (v.requires_grad()) {
      Matrix gv(v.rows(), 1);
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) gv(c, 0) += g(r, c) * a.value()(r, c);
      push(v, gv);
    }
  });
}

Tensor sum(Tape& tape, const Tensor& a) {
  double s = 0.0;
  for (double v : a.value().data) s += v;
  return finish(tape, "sum", Matrix(1, 1, s), {a},
                [a](const Matrix& g) { push(a, Matrix(a.rows(), a.cols(), g(0, 0))); });
}

Tensor sum_squares(Tape& tape, const Tensor& a) {
  double s = 0.0;
  for (double v : a.value().data) s += v * v;
  return finish(tape, "sum_squares", Matrix(1, 1, s), {a}, [a](const Matrix& g) {
    Matrix ga = a.value();
    for (double& v : ga.data) v *= 2.0 * g(0, 0);
    push(a, ga);
  });
}

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows", "column mismatch " + shape_str(p.value()));
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::size_t at = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data.begin(), p.value().data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(at * cols));
    at += p.rows();
  }
  return finish(tape, "concat_rows", std::move(out), parts, [parts](const Matrix& g) {
    std::size_t r0 = 0;
    for (const auto& p : parts) {
      if (p.requires_grad()) {
        Matrix gp(p.rows(), p.cols());
        std::copy(g.data.begin() + static_cast<std::ptrdiff_t>(r0 * g.cols),
                  g.data.begin() + static_cast<std::ptrdiff_t>((r0 + p.rows()) * g.cols), gp.data.begin());
        push(p, gp);
      }
      r0 += p.rows();
    }
  });
}

Tensor slice_rows(Tape& tape, const Tensor& a, std::size_t begin, std::size_t end) {
  require(begin <= end && end <= a.rows(), "slice_rows", "range out of bounds for " + shape_str(a.value()));
  const std::size_t cols = a.cols();
  Matrix out(end - begin, cols);
  std::copy(a.value().data.begin() + static_cast<std::ptrdiff_t>(begin * cols),
            a.value().data.begin() + static_cast<std::ptrdiff_t>(end * cols), out.data.begin());
  return finish(tape, "slice_rows", std::move(out), {a}, [a, begin, cols](const Matrix& g) {
    Matrix ga(a.rows(), cols);
    std::copy(g.data.begin(), g.data.end(), ga.data.begin() + static_cast<std::ptrdiff_t>(begin * cols));
    push(a, ga);
  });
}

Tensor weighted_sum(Tape& tape, const std::vector<Tensor>& items, const Tensor& weights) {
  require(!items.empty(), "weighted_sum", "no inputs");
  require(weights.cols() == 1 && weights.rows() == items.size(), "weighted_sum",
          "weights " + shape_str(weights.value()) + " for " + std::to_string(items.size()) + " items");
  Matrix out(items.front().rows(), items.front().cols());
  for (std::size_t k = 0; k < items.size(); ++k) {
    require(items[k].value().same_shape(out), "weighted_sum", "item shape mismatch");
    const double w = weights.value()(k, 0);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += w * items[k].value().data[i];
  }
  std::vector<Tensor> inputs = items;
  inputs.push_back(weights);
  return finish(tape, "weighted_sum", std::move(out), inputs, [items, weights](const Matrix& g) {
    Matrix gw(items.size(), 1);
    for (std::size_t k = 0; k < items.size(); ++k) {
      const double w = weights.value()(k, 0);
      if (items[k].requires_grad()) {
        Matrix gi = g;
        for (double& v : gi.data) v *= w;
        push(items[k], gi);
      }
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) s += g.data[i] * items[k].value().data[i];
      gw(k, 0) = s;
    }
    push(weights, gw);
  });
}

Tensor spmm_dense_diff(Tape& tape, std::shared_ptr<const SparseMatrix> a, const Tensor& x) {
  require(a->n_cols() == x.rows(), "spmm_dense_diff",
          std::to_string(a->n_rows()) + "x" + std::to_string(a->n_cols()) + " * " + shape_str(x.value()));
  Matrix out;
  kernels::csr_dense(a->view(), x.value(), out);
  return finish(tape, "spmm_dense", std::move(out), {x}, [a, x](const Matrix& g) {
    Matrix gx;
    kernels::csr_t_dense(a->view(), g, gx);
    push(x, gx);
  });
}

Tensor masked_weighted_sq_loss(Tape& tape, const Tensor& pred, const Matrix& target, const Matrix& mask,
                               double gamma) {
  require(pred.value().same_shape(target) && target.same_shape(mask), "masked_weighted_sq_loss",
          "pred " + shape_str(pred.value()) + ", target " + shape_str(target) + ", mask " + shape_str(mask));
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("loss gamma must lie in [0, 1]");
  // Per-entry weight from the equation: (1-g) Y^2 + g (1-Y)^2.
  Matrix w(target.rows, target.cols);
  bool any = false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (mask.data[i] == 0.0) continue;
    any = true;
    const double y = target.data[i];
    w.data[i] = (1.0 - gamma) * y * y + gamma * (1.0 - y) * (1.0 - y);
  }
  if (!any) throw ConfigError("loss mask is empty");
  double loss = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w.data[i] == 0.0) continue;
    const double d = target.data[i] - pred.value().data[i];
    loss += w.data[i] * d * d;
  }
  return finish(tape, "masked_weighted_sq_loss", Matrix(1, 1, loss), {pred},
                [pred, target, w = std::move(w)](const Matrix& g) {
                  Matrix gp(pred.rows(), pred.cols());
                  for (std::size_t i = 0; i < gp.size(); ++i) {
                    gp.data[i] = -2.0 * w.data[i] * (target.data[i] - pred.value().data[i]) * g(0, 0);
                  }
                  push(pred, gp);
                });
}

}  // namespace hampdti::tensor
