#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hampdti/matrix.hpp"

namespace hampdti::tensor {

struct Node {
  Matrix value;
  Matrix grad;  // empty until first accumulation (parameters allocate eagerly)
  bool requires_grad = false;
  std::string name;

  bool has_grad() const noexcept { return grad.size() == value.size() && value.size() > 0; }
  void accumulate(const Matrix& g);
};

// Shared handle to a value on (or off) the tape.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix value, std::string name = {});
  static Tensor parameter(Matrix value, std::string name);
  // Internal: result of a recorded op.
  static Tensor intermediate(Matrix value, bool requires_grad, std::string name);

  bool defined() const noexcept { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Matrix& mutable_grad() { return node_->grad; }
  bool has_grad() const { return node_->has_grad(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const std::string& name() const { return node_->name; }

  std::size_t rows() const { return node_->value.rows; }
  std::size_t cols() const { return node_->value.cols; }
  // Value of a 1x1 tensor.
  double item() const;

  void zero_grad();
  // Detached copy holding the same value, no gradient.
  Tensor detached() const { return constant(value(), name()); }

  Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& shared() const noexcept { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
};

// Records ops in execution order; backward replays them in exact reverse.
class Tape {
 public:
  struct Record {
    std::string op;
    std::vector<std::shared_ptr<Node>> inputs;
    std::shared_ptr<Node> output;
    std::function<void()> backward;
  };

  void record(std::string op, std::vector<Tensor> inputs, const Tensor& output, std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1, accumulates gradients into every tensor that
  // requires them, then clears the tape. `loss` must be 1x1.
  void backward(const Tensor& loss);
  void clear() noexcept { records_.clear(); }

  std::size_t size() const noexcept { return records_.size(); }
  const std::vector<Record>& records() const noexcept { return records_; }

 private:
  std::vector<Record> records_;
};

// True if any tensor requires a gradient.
bool any_requires_grad(std::initializer_list<const Tensor*> ts);

}  // namespace hampdti::tensor
