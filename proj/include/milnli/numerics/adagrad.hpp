#pragma once

#include <vector>

#include "milnli/numerics/tape.hpp"

namespace milnli {

// Adagrad (Duchi et al.): acc += g^2; param -= lr * g / (sqrt(acc) + eps).
class Adagrad {
 public:
  Adagrad(const ParameterSet& params, double learning_rate, double epsilon = 1e-10);

  void step(ParameterSet& params, const Gradients& grads);

  double learning_rate() const { return learning_rate_; }
  double epsilon() const { return epsilon_; }
  const std::vector<Tensor>& accumulators() const { return accumulators_; }

 private:
  double learning_rate_;
  double epsilon_;
  std::vector<Tensor> accumulators_;
};

}  // namespace milnli
