#pragma once

#include <functional>

#include "milnli/numerics/tape.hpp"

namespace milnli {

/// Builds a scalar loss on `tape` from `params` (bound via Tape::parameter).
using LossBuilder = std::function<Var(Tape& tape, const ParameterSet& params)>;

/// |a - n| / max(|a|, |n|, floor). The floor keeps components too small for
/// central differences to resolve from dominating the comparison.
double relative_error(double analytic, double numeric, double floor = 1e-8);

/// Max relative error between `analytic` and central differences of
/// `objective` with step `h`, over every element of every parameter.
/// `params` is perturbed in place and restored before returning.
double gradient_check(ParameterSet& params, const Gradients& analytic,
                      const std::function<double(const ParameterSet&)>& objective,
                      double h, double floor = 1e-8);

/// Runs `loss` once with gradients, then compares against central finite
/// differences of the same builder.
double finite_diff_check(const LossBuilder& loss, ParameterSet& params, double h,
                         double floor = 1e-8);

}  // namespace milnli
