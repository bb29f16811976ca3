#include <filesystem>

#include "doctest.h"
#include "hampdti/error.hpp"
#include "hampdti/tensor/io.hpp"
#include "hampdti/tensor/layers.hpp"
#include "hampdti/tensor/ops.hpp"
#include "hampdti/tensor/optim.hpp"
#include "test_util.hpp"

using namespace hampdti;
using namespace hampdti::tensor;
using namespace testutil;

namespace {

Matrix away_from_zero(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  return m;
}

// Scalar probe: sum(op(inputs) * R) for a fixed random R.
double check_op(const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& op, std::vector<Matrix> inputs,
                std::uint64_t seed) {
  std::vector<Tensor> params;
  for (std::size_t i = 0; i < inputs.size(); ++i) params.push_back(Tensor::parameter(inputs[i], "in" + std::to_string(i)));
  Rng rng(seed);
  Tape probe;
  const Tensor shape = op(probe, params);
  probe.clear();
  const Tensor weights = Tensor::constant(random_dense(shape.rows(), shape.cols(), rng));
  auto fwd = [&](Tape& tape) { return sum(tape, mul(tape, op(tape, params), weights)); };
  return grad_check(fwd, params, 1e-5).max_rel_error;
}

}  // namespace

TEST_CASE("forward op examples") {
  Tape tape;
  CHECK(relu(tape, Tensor::constant(Matrix(1, 3, std::vector<double>{-1, 0, 2}))).value() ==
        Matrix(1, 3, std::vector<double>{0, 0, 2}));
  const Tensor sm = softmax_vector(tape, Tensor::constant(Matrix(4, 1, 3.0)));
  for (double v : sm.value().data) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(row_max_pool(tape, Tensor::constant(Matrix::from_rows({{1, 5}, {3, 2}}))).value() ==
        Matrix(1, 2, std::vector<double>{3, 5}));
  CHECK(tape.size() == 0);  // constants only: nothing recorded
}

TEST_CASE("softmax is a strictly positive probability vector") {
  Rng rng(2);
  Tape tape;
  for (int i = 0; i < 50; ++i) {
    Matrix logits = random_dense(11, 1, rng, -30.0, 30.0);
    const Tensor y = softmax_vector(tape, Tensor::constant(logits));
    double s = 0.0;
    for (double v : y.value().data) {
      CHECK(v > 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("backward analytic cases") {
  Tensor x = Tensor::parameter(Matrix::from_rows({{1, -2}, {3, 0.5}}), "x");
  {
    Tape tape;
    tape.backward(sum(tape, x));
    CHECK(x.grad() == Matrix(2, 2, 1.0));
    CHECK(tape.size() == 0);
  }
  x.zero_grad();
  {
    Tape tape;
    tape.backward(sum_squares(tape, x));
    Matrix twice = x.value();
    for (double& v : twice.data) v *= 2.0;
    CHECK(x.grad() == twice);
  }
  Tape tape;
  const Tensor y = scale(tape, x, 2.0);
  CHECK_THROWS_AS(tape.backward(y), ShapeError);
}

TEST_CASE("non-finite results raise NumericError") {
  Tape tape;
  CHECK_THROWS_AS(inv_sqrt(tape, Tensor::constant(Matrix(1, 1, 0.0))), NumericError);
  CHECK_THROWS_AS(scale(tape, Tensor::constant(Matrix(1, 1, 1e300)), 1e300), NumericError);
  CHECK_THROWS_AS(matmul(tape, Tensor::constant(Matrix(2, 3)), Tensor::constant(Matrix(2, 3))), ShapeError);
}

TEST_CASE("every primitive matches central differences") {
  Rng rng(31);
  const double tol = 1e-6;
  auto unary = [&](auto fn) { return [fn](Tape& t, const std::vector<Tensor>& p) { return fn(t, p[0]); }; };
  CHECK(check_op([](Tape& t, auto& p) { return matmul(t, p[0], p[1]); },
                 {random_dense(3, 4, rng), random_dense(4, 2, rng)}, 1) < tol);
  CHECK(check_op([](Tape& t, auto& p) { return matmul_nt(t, p[0], p[1]); },
                 {random_dense(3, 4, rng), random_dense(5, 4, rng)}, 2) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return transpose(t, a); }), {random_dense(3, 2, rng)}, 3) < tol);
  CHECK(check_op([](Tape& t, auto& p) { return add(t, p[0], p[1]); }, {random_dense(2, 3, rng), random_dense(2, 3, rng)}, 4) < tol);
  CHECK(check_op([](Tape& t, auto& p) { return sub(t, p[0], p[1]); }, {random_dense(2, 3, rng), random_dense(2, 3, rng)}, 5) < tol);
  CHECK(check_op([](Tape& t, auto& p) { return mul(t, p[0], p[1]); }, {random_dense(2, 3, rng), random_dense(2, 3, rng)}, 6) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return scale(t, a, -1.7); }), {random_dense(2, 2, rng)}, 7) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return add_scalar(t, a, 0.3); }), {random_dense(2, 2, rng)}, 8) < tol);
  CHECK(check_op([](Tape& t, auto& p) { return add_row_broadcast(t, p[0], p[1]); },
                 {random_dense(4, 3, rng), random_dense(1, 3, rng)}, 9) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return relu(t, a); }), {away_from_zero(3, 3, rng)}, 10) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return sigmoid(t, a); }), {random_dense(3, 3, rng, -3, 3)}, 11) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return inv_sqrt(t, a); }), {random_dense(3, 2, rng, 0.5, 3)}, 12) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return softmax_vector(t, a); }), {random_dense(6, 1, rng, -2, 2)}, 13) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return row_max_pool(t, a); }), {random_dense(5, 4, rng)}, 14) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return row_sums(t, a); }), {random_dense(3, 4, rng)}, 15) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return col_sums(t, a); }), {random_dense(3, 4, rng)}, 16) < tol);
  CHECK(check_op([](Tape& t, auto& p) { return scale_rows(t, p[0], p[1]); },
                 {random_dense(3, 4, rng), random_dense(3, 1, rng)}, 17) < tol);
  CHECK(check_op([](Tape& t, auto& p) { return scale_cols(t, p[0], p[1]); },
                 {random_dense(3, 4, rng), random_dense(4, 1, rng)}, 18) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return sum(t, a); }), {random_dense(3, 4, rng)}, 19) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return sum_squares(t, a); }), {random_dense(3, 4, rng)}, 20) < tol);
  CHECK(check_op([](Tape& t, auto& p) { return concat_rows(t, {p[0], p[1]}); },
                 {random_dense(2, 3, rng), random_dense(1, 3, rng)}, 21) < tol);
  CHECK(check_op(unary([](Tape& t, const Tensor& a) { return slice_rows(t, a, 1, 3); }), {random_dense(4, 2, rng)}, 22) < tol);
  CHECK(check_op([](Tape& t, auto& p) { return weighted_sum(t, {p[0], p[1]}, p[2]); },
                 {random_dense(2, 3, rng), random_dense(2, 3, rng), random_dense(2, 1, rng)}, 23) < tol);
  auto sp = std::make_shared<const SparseMatrix>(SparseMatrix::from_dense(random_nonneg_sparse_dense(5, 4, 0.5, rng)));
  CHECK(check_op(unary([sp](Tape& t, const Tensor& a) { return spmm_dense_diff(t, sp, a); }), {random_dense(4, 3, rng)}, 24) < tol);
  const Matrix target = random_binary(3, 4, 0.5, rng), mask = random_binary(3, 4, 0.7, rng);
  CHECK(check_op(unary([&](Tape& t, const Tensor& a) { return masked_weighted_sq_loss(t, a, target, mask, 0.4); }),
                 {random_dense(3, 4, rng)}, 25) < tol);
}

TEST_CASE("masked loss identity at gamma = 0.5") {
  Rng rng(37);
  Tape tape;
  for (int i = 0; i < 20; ++i) {
    const Matrix y = random_binary(6, 5, 0.4, rng);
    Matrix mask = random_binary(6, 5, 0.6, rng);
    mask(0, 0) = 1.0;
    const Matrix pred = random_dense(6, 5, rng, -2, 2);
    double expect = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double d = mask.data[k] * (y.data[k] - pred.data[k]);
      expect += d * d;
    }
    const double got = masked_weighted_sq_loss(tape, Tensor::constant(pred), y, mask, 0.5).item();
    CHECK(std::abs(got - 0.5 * expect) < 1e-12);
    CHECK(masked_weighted_sq_loss(tape, Tensor::constant(y), y, mask, 0.4).item() == 0.0);
  }
  CHECK_THROWS_AS(masked_weighted_sq_loss(tape, Tensor::constant(Matrix(2, 2)), Matrix(2, 2), Matrix(2, 2), 0.4),
                  ConfigError);
}

TEST_CASE("Adam") {
  SUBCASE("zero gradient leaves fresh parameters unchanged") {
    Tensor w = Tensor::parameter(Matrix(1, 3, std::vector<double>{1, 2, 3}), "w");
    Adam opt({w});
    opt.step();
    CHECK(w.value() == Matrix(1, 3, std::vector<double>{1, 2, 3}));
    CHECK(opt.steps() == 1);
  }
  SUBCASE("constant gradient moves against its sign") {
    Tensor w = Tensor::parameter(Matrix(1, 1, 0.0), "w");
    Adam opt({w}, {.lr = 0.01});
    for (int i = 0; i < 100; ++i) {
      w.mutable_grad()(0, 0) = 2.5;
      opt.step();
    }
    CHECK(w.value()(0, 0) < -0.5);
  }
  SUBCASE("quadratic bowl converges within 2000 steps at lr 1e-2") {
    Rng rng(41);
    const Matrix target = random_dense(1, 5, rng, -2, 2);
    Tensor w = Tensor::parameter(Matrix(1, 5), "w");
    Adam opt({w}, {.lr = 1e-2});
    const Tensor t = Tensor::constant(target);
    for (int i = 0; i < 2000; ++i) {
      Tape tape;
      tape.backward(sum_squares(tape, sub(tape, w, t)));
      opt.step();
    }
    CHECK(frobenius_norm(Matrix(1, 5, [&] {
            std::vector<double> d(5);
            for (int i = 0; i < 5; ++i) d[i] = w.value().data[i] - target.data[i];
            return d;
          }())) < 1e-3);
  }
  SUBCASE("missing gradient storage is an error") {
    Tensor c = Tensor::constant(Matrix(1, 1), "c");
    Adam opt({c});
    CHECK_THROWS_AS(opt.step(), Error);
  }
}

TEST_CASE("grad_check") {
  Rng rng(43);
  SUBCASE("linear model") {
    Tensor w = Tensor::parameter(random_dense(3, 1, rng), "w");
    const Tensor x = Tensor::constant(random_dense(5, 3, rng));
    const auto r = grad_check([&](Tape& t) { return sum(t, matmul(t, x, w)); }, {w});
    CHECK(r.max_rel_error < 1e-8);
    CHECK(r.coords_checked == 3);
  }
  SUBCASE("frozen parameters get exactly zero gradient") {
    Tensor w = Tensor::parameter(random_dense(2, 2, rng), "w");
    Tensor frozen = Tensor::parameter(random_dense(2, 2, rng), "frozen");
    const auto r = grad_check([&](Tape& t) { return sum_squares(t, w); }, {w, frozen});
    CHECK(r.max_rel_error < 1e-8);
    Tape tape;
    tape.backward(sum_squares(tape, w));
    CHECK(frozen.grad() == Matrix(2, 2));
  }
  SUBCASE("three-layer network") {
    Rng init(47);
    Mlp net("net", {4, 6, 5, 2}, Activation::relu, Activation::sigmoid, true, init);
    const Tensor x = Tensor::constant(random_dense(7, 4, rng));
    const Matrix y = random_binary(7, 2, 0.5, rng);
    const Matrix mask(7, 2, 1.0);
    const auto r = grad_check(
        [&](Tape& t) { return masked_weighted_sq_loss(t, net.forward(t, x), y, mask, 0.4); }, net.params());
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("forward is bitwise deterministic") {
  auto run = [] {
    Rng init(53);
    Mlp net("net", {8, 16, 4}, Activation::relu, Activation::identity, true, init);
    Rng data(59);
    const Tensor x = Tensor::constant(random_dense(10, 8, data));
    Tape tape;
    return net.forward(tape, x).value();
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint round trip is exact") {
  Rng rng(61);
  Checkpoint c;
  c.meta["config_hash"] = "abc123";
  c.tensors.push_back({"a", random_dense(3, 2, rng)});
  c.tensors.push_back({"b", Matrix(1, 1, 1.0 / 3.0)});
  const auto path = std::filesystem::temp_directory_path() / "hampdti_ckpt_test.txt";
  save_checkpoint(path, c);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.meta == c.meta);
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.get("a") == c.tensors[0].value);
  CHECK(back.get("b") == c.tensors[1].value);
  CHECK_THROWS_AS(checkpoint_from_string("hampdti-checkpoint 1\ntensor a 1 1\n0.5\n"), Error);

  const auto mpath = std::filesystem::temp_directory_path() / "hampdti_matrix_test.txt";
  write_matrix(mpath, c.tensors[0].value);
  CHECK(read_matrix(mpath) == c.tensors[0].value);
}
