#include "milnli/explain/attention_threshold.hpp"

#include <cmath>

#include "milnli/numerics/errors.hpp"

namespace milnli {

Explanation threshold_attention(const Prediction& prediction, const ThresholdOptions& options) {
  if (!(options.tau >= 0.0 && options.tau < 1.0)) {
    throw ContractError("threshold tau must lie in [0, 1)");
  }
  Explanation e;
  e.method = "attention";
  for (Side side : {Side::kPremise, Side::kHypothesis}) {
    if (side == Side::kPremise && prediction.label() == Label::kNeutral) continue;
    const std::vector<double> weights = options.use_normalized
                                            ? prediction.attention.dist(side)
                                            : prediction.attention.raw(side);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double rescaled = std::tanh(weights[i]);
      // tau = 0 keeps only tokens with some attention mass.
      if (rescaled >= options.tau && weights[i] > 0.0) {
        e.indices(side).insert(i);
        e.scores(side)[i] = rescaled;
      }
    }
  }
  return e;
}

}  // namespace milnli
