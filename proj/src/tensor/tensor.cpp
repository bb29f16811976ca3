#include "hampdti/tensor/tensor.hpp"

#include "hampdti/error.hpp"

namespace hampdti::tensor {

void Node::accumulate(const Matrix& g) {
  if (!g.same_shape(value)) {
    throw ShapeError("gradient shape " + std::to_string(g.rows) + "x" + std::to_string(g.cols) +
                     " does not match value " + std::to_string(value.rows) + "x" + std::to_string(value.cols) +
                     (name.empty() ? "" : " for '" + name + "'"));
  }
  if (!has_grad()) {
    grad = g;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) grad.data[i] += g.data[i];
}

Tensor Tensor::constant(Matrix value, std::string name) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->name = std::move(name);
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(Matrix value, std::string name) {
  if (!value.all_finite()) throw NumericError("parameter '" + name + "' initialized with non-finite values");
  auto n = std::make_shared<Node>();
  n->grad = Matrix(value.rows, value.cols);
  n->value = std::move(value);
  n->requires_grad = true;
  n->name = std::move(name);
  return Tensor(std::move(n));
}

Tensor Tensor::intermediate(Matrix value, bool requires_grad, std::string name) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->name = std::move(name);
  return Tensor(std::move(n));
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) throw ShapeError("item() needs a 1x1 tensor");
  return value().data[0];
}

void Tensor::zero_grad() {
  if (node_->requires_grad) node_->grad = Matrix(rows(), cols());
}

void Tape::record(std::string op, std::vector<Tensor> inputs, const Tensor& output, std::function<void()> backward) {
  Record r;
  r.op = std::move(op);
  r.inputs.reserve(inputs.size());
  for (auto& t : inputs) r.inputs.push_back(t.shared());
  r.output = output.shared();
  r.backward = std::move(backward);
  records_.push_back(std::move(r));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.rows() != 1 || loss.cols() != 1) {
    records_.clear();
    throw ShapeError("backward needs a scalar (1x1) loss");
  }
  if (!loss.requires_grad()) {
    records_.clear();
    return;
  }
  loss.node()->accumulate(Matrix(1, 1, 1.0));
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output->has_grad()) it->backward();
  }
  records_.clear();
}

bool any_requires_grad(std::initializer_list<const Tensor*> ts) {
  for (const Tensor* t : ts) {
    if (t->requires_grad()) return true;
  }
  return false;
}

}  // namespace hampdti::tensor
