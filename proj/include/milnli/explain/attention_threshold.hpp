#pragma once

#include "milnli/explain/explanation.hpp"
#include "milnli/model/entail_model.hpp"

namespace milnli {

struct ThresholdOptions {
  double tau = 0.5;
  /// Threshold the normalized distributions instead of the raw scores.
  bool use_normalized = false;
};

/// Selects tokens whose tanh-rescaled attention reaches tau. Premise scores
/// come from the last column of the score matrix, hypothesis scores from its
/// last row. A neutral prediction selects nothing from the premise.
Explanation threshold_attention(const Prediction& prediction, const ThresholdOptions& options);

}  // namespace milnli
