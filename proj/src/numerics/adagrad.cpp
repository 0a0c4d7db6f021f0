#include "milnli/numerics/adagrad.hpp"

#include <cmath>

#include "milnli/numerics/errors.hpp"

namespace milnli {

Adagrad::Adagrad(const ParameterSet& params, double learning_rate, double epsilon)
    : learning_rate_(learning_rate), epsilon_(epsilon) {
  if (!(learning_rate > 0.0)) throw ContractError("Adagrad learning rate must be positive");
  if (epsilon < 0.0) throw ContractError("Adagrad epsilon must be non-negative");
  accumulators_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    accumulators_.emplace_back(params.value(i).shape(), 0.0);
  }
}

void Adagrad::step(ParameterSet& params, const Gradients& grads) {
  if (params.size() != accumulators_.size() || grads.size() != accumulators_.size()) {
    throw ShapeError("Adagrad: parameter/gradient/accumulator counts differ");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& value = params.value(p);
    Tensor& acc = accumulators_[p];
    const Tensor& g = grads[p];
    if (value.shape() != acc.shape() || g.shape() != acc.shape()) {
      throw ShapeError("Adagrad: shape mismatch for '" + params.name(p) + "': param " +
                       shape_string(value.shape()) + ", grad " + shape_string(g.shape()) +
                       ", accumulator " + shape_string(acc.shape()));
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (g[i] == 0.0) continue;
      acc[i] += g[i] * g[i];
      value[i] -= learning_rate_ * g[i] / (std::sqrt(acc[i]) + epsilon_);
    }
  }
}

}  // namespace milnli
