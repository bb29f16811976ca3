#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hampdti/tensor/tensor.hpp"

namespace hampdti::tensor {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer. Holds its parameters by handle.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config = {});

  // Applies one update from the accumulated gradients, then zeroes them.
  // Throws if a parameter has no gradient storage.
  void step();
  void zero_grad();

  std::size_t steps() const noexcept { return step_; }
  const AdamConfig& config() const noexcept { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  const std::vector<Matrix>& first_moments() const noexcept { return m_; }
  const std::vector<Matrix>& second_moments() const noexcept { return v_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }

 private:
  std::vector<Tensor> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  AdamConfig config_;
  std::size_t step_ = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

// Compares reverse-mode gradients of `forward` (which must rebuild its graph
// from the current parameter values on every call and return a scalar) with
// central differences. Relative error per coordinate is
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
// `max_coords_per_param` = 0 checks every coordinate; otherwise a seeded
// sample of that many per parameter.
GradCheckResult grad_check(const std::function<Tensor(Tape&)>& forward, const std::vector<Tensor>& params,
                           double h = 1e-5, std::size_t max_coords_per_param = 0, std::uint64_t seed = 0);

}  // namespace hampdti::tensor
