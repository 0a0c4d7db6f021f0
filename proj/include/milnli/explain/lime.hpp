#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "milnli/explain/classifier_handle.hpp"
#include "milnli/explain/explanation.hpp"

namespace milnli {

/// How per-token LIME weights become a highlight set.
enum class LimeSelection {
  /// Tokens with positive weight toward the predicted class, top-K by weight.
  kPositiveTopK,
  /// Top-K by |weight| regardless of sign.
  kAbsoluteTopK,
};

struct LimeOptions {
  std::size_t samples = 1000;
  double ridge = 1.0;
  double kernel_width = 0.25;
  std::size_t top_k = 10;
  LimeSelection selection = LimeSelection::kPositiveTopK;
  std::uint64_t seed = 1;
  /// Threads issuing classifier queries; results do not depend on it.
  std::size_t workers = 1;

  std::map<std::string, std::string> to_map() const;
  static LimeOptions from_map(const std::map<std::string, std::string>& kv);
};

struct LimeWeights {
  std::vector<double> weights;  // one per token of the explained side
  double intercept = 0.0;
  /// Class whose probability the surrogate models.
  Label target = Label::kEntails;
  std::size_t queries = 0;
};

struct RidgeFit {
  std::vector<double> coefficients;
  double intercept = 0.0;
};

/// Minimizes sum_s w_s (y_s - b - x_s . beta)^2 + lambda |beta|^2 with an
/// unpenalized intercept b. Rows of `x` are samples.
RidgeFit weighted_ridge(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                        const std::vector<double>& sample_weights, double lambda);

/// exp(-D^2 / width^2), D the cosine distance between a binary mask with
/// `kept` ones out of `total` and the all-ones mask.
double lime_kernel(std::size_t kept, std::size_t total, double width);

/// Local linear surrogate for one sentence of the pair: tokens of `side` are
/// deleted at random (the other sentence stays fixed) and the probability of
/// `target` is regressed on the keep-mask. A one-token side gets all-zero
/// weights. QueryError names the failing sample.
LimeWeights lime_explain_side(const PairClassifierHandle& handle, const EncodedInstance& instance,
                              Side side, Label target, const LimeOptions& options);

/// Runs the side explainer on premise and hypothesis for the predicted class
/// and selects tokens per options.selection.
Explanation lime_explain_pair(const PairClassifierHandle& handle, const EncodedInstance& instance,
                              const LimeOptions& options);

}  // namespace milnli
