#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hampdti/random.hpp"
#include "hampdti/tensor/io.hpp"
#include "hampdti/tensor/ops.hpp"

namespace hampdti::tensor {

// Uniform Glorot initialization.
Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Feed-forward perceptron: widths[0] -> widths[1] -> ... with `hidden`
// activation between layers and `output` activation after the last one.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, std::vector<std::size_t> widths, Activation hidden, Activation output, bool bias, Rng& rng);

  Tensor forward(Tape& tape, const Tensor& x) const;

  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  std::size_t in_width() const { return widths_.front(); }
  std::size_t out_width() const { return widths_.back(); }
  std::vector<Tensor> params() const;

  void save(std::vector<NamedMatrix>& out) const;
  void load(const Checkpoint& ckpt);

  std::vector<Tensor>& weights() { return weights_; }
  std::vector<Tensor>& biases() { return biases_; }

 private:
  std::string name_;
  std::vector<std::size_t> widths_;
  Activation hidden_ = Activation::relu;
  Activation output_ = Activation::identity;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

}  // namespace hampdti::tensor
