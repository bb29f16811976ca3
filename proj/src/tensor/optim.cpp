#include "hampdti/tensor/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hampdti/error.hpp"

namespace hampdti::tensor {

Adam::Adam(std::vector<Tensor> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  if (!(config_.lr >= 0.0) || !(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 >= 0.0 && config_.beta2 < 1.0) || !(config_.eps > 0.0)) {
    throw ConfigError("invalid Adam hyper-parameters");
  }
  for (const auto& p : params_) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void Adam::step() {
  for (const auto& p : params_) {
    if (!p.requires_grad() || !p.has_grad()) {
      throw Error("optimizer: parameter '" + p.name() + "' has no gradient");
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor p = params_[k];
    Matrix& w = p.mutable_value();
    const Matrix& g = p.grad();
    Matrix& m = m_[k];
    Matrix& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m.data[i] = config_.beta1 * m.data[i] + (1.0 - config_.beta1) * g.data[i];
      v.data[i] = config_.beta2 * v.data[i] + (1.0 - config_.beta2) * g.data[i] * g.data[i];
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      w.data[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
    if (!w.all_finite()) throw NumericError("optimizer produced non-finite values in '" + p.name() + "'");
  }
  zero_grad();
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

GradCheckResult grad_check(const std::function<Tensor(Tape&)>& forward, const std::vector<Tensor>& params,
                           double h, std::size_t max_coords_per_param, std::uint64_t seed) {
  std::vector<Tensor> ps = params;
  for (auto& p : ps) p.zero_grad();
  {
    Tape tape;
    Tensor loss = forward(tape);
    tape.backward(loss);
  }
  std::vector<Matrix> analytic;
  for (const auto& p : ps) analytic.push_back(p.has_grad() ? p.grad() : Matrix(p.rows(), p.cols()));

  auto eval = [&] {
    Tape tape;
    const double v = forward(tape).item();
    tape.clear();
    return v;
  };

  GradCheckResult res;
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    Tensor p = ps[k];
    const std::size_t n = p.value().size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords_per_param > 0 && max_coords_per_param < n) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      double& x = p.mutable_value().data[i];
      const double orig = x;
      x = orig + h;
      const double fp = eval();
      x = orig - h;
      const double fm = eval();
      x = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[k].data[i];
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      ++res.coords_checked;
      if (rel > res.max_rel_error || res.worst_param.empty()) {
        if (rel >= res.max_rel_error) {
          res.max_rel_error = rel;
          res.worst_param = p.name();
          res.worst_index = i;
          res.worst_analytic = a;
          res.worst_numeric = numeric;
        }
      }
    }
  }
  for (auto& p : ps) p.zero_grad();
  return res;
}

}  // namespace hampdti::tensor
