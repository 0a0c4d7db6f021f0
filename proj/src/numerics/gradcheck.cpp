#include "milnli/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "milnli/numerics/errors.hpp"

namespace milnli {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

double gradient_check(ParameterSet& params, const Gradients& analytic,
                      const std::function<double(const ParameterSet&)>& objective,
                      double h, double floor) {
  if (!(h > 0.0)) throw ContractError("finite-difference step must be positive");
  if (analytic.size() != params.size()) throw ShapeError("gradient set size mismatch");
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& value = params.value(p);
    if (analytic[p].size() != value.size()) {
      throw ShapeError("gradient for '" + params.name(p) + "' has wrong shape");
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + h;
      const double up = objective(params);
      value[i] = saved - h;
      const double down = objective(params);
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, relative_error(analytic[p][i], numeric, floor));
    }
  }
  return worst;
}

double finite_diff_check(const LossBuilder& loss, ParameterSet& params, double h,
                         double floor) {
  Gradients analytic;
  {
    Tape tape;
    Var out = loss(tape, params);
    analytic = tape.backward(out, params);
  }
  auto objective = [&loss](const ParameterSet& ps) {
    Tape tape(false);
    return loss(tape, ps).value().item();
  };
  return gradient_check(params, analytic, objective, h, floor);
}

}  // namespace milnli
