#pragma once

#include <span>

#include "milnli/corpus/vocabulary.hpp"
#include "milnli/model/entail_model.hpp"
#include "milnli/numerics/tape.hpp"

namespace milnli {

/// Weights of the attention regularizers and the explanation threshold.
struct RegularizerWeights {
  double alpha = 0.0;  // entropy
  double beta = 0.0;   // max-weight constraint
  double gamma = 0.0;  // min-weight penalty
  double tau = 0.5;

  /// Throws ConfigError on negative weights or tau outside [0, 1).
  void validate() const;
  bool any() const { return alpha != 0.0 || beta != 0.0 || gamma != 0.0; }
};

/// Probabilities below this are clamped in cross_entropy.
inline constexpr double kProbabilityFloor = 1e-12;
/// Attention weights at or below this are treated as zero by r3_min.
inline constexpr double kNonZeroWeight = 1e-8;

/// -log probs[y]; clamped at kProbabilityFloor (with a warning).
Var cross_entropy(Var probs, Label gold);
/// H(a_p) + H(a_h), natural log, 0 log 0 = 0.
Var r1_entropy(Var premise_dist, Var hypothesis_dist);
/// (max a_p - [y != neutral])^2 + (max a_h - 1)^2.
Var r2_max(Var premise_dist, Var hypothesis_dist, Label gold);
/// (smallest a_p above 1e-8)^2 + (smallest a_h above 1e-8)^2; a side with no
/// such weight contributes 0.
Var r3_min(Var premise_dist, Var hypothesis_dist);

// Value-only forms of the above.
double cross_entropy(std::span<const double> probs, Label gold);
double r1_entropy(std::span<const double> premise_dist, std::span<const double> hypothesis_dist);
double r2_max(std::span<const double> premise_dist, std::span<const double> hypothesis_dist,
              Label gold);
double r3_min(std::span<const double> premise_dist, std::span<const double> hypothesis_dist);

/// Loss of one instance: cross-entropy plus the weighted regularizers.
/// Regularizers with zero weight are not built at all.
Var instance_loss(const EntailModel& model, ParamBinder& bind, const EncodedInstance& instance,
                  const RegularizerWeights& weights);

/// Sum of instance_loss over a non-empty batch.
Var total_loss(const EntailModel& model, ParamBinder& bind,
               std::span<const EncodedInstance> batch, const RegularizerWeights& weights);

}  // namespace milnli
