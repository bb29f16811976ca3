#include "hampdti/tensor/layers.hpp"

#include <cmath>

#include "hampdti/error.hpp"

namespace hampdti::tensor {

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (double& v : w.data) v = rng.uniform(-limit, limit);
  return w;
}

Mlp::Mlp(std::string name, std::vector<std::size_t> widths, Activation hidden, Activation output, bool bias,
         Rng& rng)
    : name_(std::move(name)), widths_(std::move(widths)), hidden_(hidden), output_(output) {
  if (widths_.size() < 2) throw ConfigError("perceptron '" + name_ + "' needs at least input and output widths");
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] == 0 || widths_[l + 1] == 0) throw ConfigError("perceptron '" + name_ + "' has a zero width");
    weights_.push_back(Tensor::parameter(glorot(widths_[l], widths_[l + 1], rng), name_ + ".w" + std::to_string(l)));
    if (bias) biases_.push_back(Tensor::parameter(Matrix(1, widths_[l + 1]), name_ + ".b" + std::to_string(l)));
  }
}

Tensor Mlp::forward(Tape& tape, const Tensor& x) const {
  if (x.cols() != in_width()) {
    throw ShapeError("perceptron '" + name_ + "' expects width " + std::to_string(in_width()) + ", got " +
                     std::to_string(x.cols()));
  }
  Tensor h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = matmul(tape, h, weights_[l]);
    if (!biases_.empty()) h = add_row_broadcast(tape, h, biases_[l]);
    h = activate(tape, h, l + 1 == weights_.size() ? output_ : hidden_);
  }
  return h;
}

std::vector<Tensor> Mlp::params() const {
  std::vector<Tensor> out = weights_;
  out.insert(out.end(), biases_.begin(), biases_.end());
  return out;
}

void Mlp::save(std::vector<NamedMatrix>& out) const {
  for (const auto& p : params()) out.push_back({p.name(), p.value()});
}

void Mlp::load(const Checkpoint& ckpt) {
  for (auto& p : params()) {
    const Matrix& m = ckpt.get(p.name());
    if (!m.same_shape(p.value())) throw ShapeError("checkpoint shape mismatch for '" + p.name() + "'");
    Tensor handle = p;
    handle.mutable_value() = m;
  }
}

}  // namespace hampdti::tensor
