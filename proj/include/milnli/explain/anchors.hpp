#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "milnli/corpus/vocabulary.hpp"
#include "milnli/explain/classifier_handle.hpp"
#include "milnli/explain/explanation.hpp"

namespace milnli {

struct AnchorOptions {
  /// Substituted for tokens outside the anchor.
  TokenId placeholder = Vocabulary::kUnk;
  double substitution_probability = 0.5;
  double precision_target = 0.95;
  /// Each Hoeffding bound holds with probability 1 - delta.
  double delta = 0.1;
  /// Candidates whose bounds are all narrower than this are treated as ties.
  double tolerance = 0.05;
  /// Perturbation samples drawn per arm and round.
  std::size_t batch = 50;
  /// Perturbation samples per side before giving up with a best-effort rule.
  std::size_t max_samples = 5000;
  /// Samples used for the coverage estimate; these cost no queries.
  std::size_t coverage_samples = 1000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  std::map<std::string, std::string> to_map() const;
  static AnchorOptions from_map(const std::map<std::string, std::string>& kv);
};

struct AnchorRule {
  Side side = Side::kPremise;
  IndexSet tokens;
  /// Token -> empirical precision of the rule right after it was added.
  std::map<std::size_t, double> step_precision;
  double precision = 1.0;
  /// Hoeffding lower bound at confidence 1 - delta.
  double lower_bound = 0.0;
  double delta = 0.1;
  double precision_target = 0.95;
  /// Fraction of unconstrained perturbations that keep every anchor token.
  double coverage = 1.0;
  bool converged = false;
  std::size_t samples = 0;
  /// Distinct perturbed inputs actually sent to the classifier.
  std::size_t queries = 0;
};

/// Hoeffding interval half-width for n Bernoulli samples.
double hoeffding_radius(std::size_t n, double delta);

/// Greedy anchor search over the tokens of `side` for the pair's predicted
/// label. Tokens outside the candidate rule are replaced by the placeholder
/// independently; arms are compared by successive elimination. Returns the
/// first rule whose lower bound reaches the target, or the current rule
/// flagged unconverged once the sample budget runs out. QueryError names
/// the failing sample.
AnchorRule anchors_explain_side(const PairClassifierHandle& handle, const EncodedInstance& instance,
                                Side side, const AnchorOptions& options);

/// Both sides' anchors as one explanation; token scores are step precisions.
Explanation anchors_explain_pair(const PairClassifierHandle& handle,
                                 const EncodedInstance& instance, const AnchorOptions& options);

}  // namespace milnli
