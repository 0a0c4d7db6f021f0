#pragma once

#include <vector>

#include "milnli/numerics/tape.hpp"
#include "milnli/numerics/tensor.hpp"

namespace milnli {

/// One label per token, 1 = highlighted.
using TagSequence = std::vector<std::size_t>;

inline constexpr std::size_t kNumTags = 2;

/// Linear-chain CRF scores. transitions(j, k) scores tag j followed by tag k.
struct CrfParams {
  Tensor transitions{{kNumTags, kNumTags}};
  Tensor start{{kNumTags}};
  Tensor stop{{kNumTags}};

  /// Throws DomainError on non-finite entries, ShapeError on wrong shapes.
  void validate() const;
};

// Value-level forms. `emissions` is [len x 2] with len >= 1; ContractError
// otherwise.
double crf_log_partition(const Tensor& emissions, const CrfParams& params);
double crf_sequence_score(const Tensor& emissions, const CrfParams& params,
                          const TagSequence& tags);
/// Highest-scoring sequence; ties resolve toward tag 0 position by position
/// from the end.
TagSequence viterbi_decode(const Tensor& emissions, const CrfParams& params);
/// Posterior probability of tag 1 at each position.
std::vector<double> crf_positive_marginals(const Tensor& emissions, const CrfParams& params);

namespace ops {

/// log Z by the forward algorithm, differentiable in all four inputs
/// (gradients are the forward-backward marginals).
Var crf_log_partition(Var emissions, Var transitions, Var start, Var stop);
Var crf_sequence_score(Var emissions, Var transitions, Var start, Var stop,
                       const TagSequence& tags);

}  // namespace ops

}  // namespace milnli
