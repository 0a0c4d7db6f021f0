#pragma once

#include <map>
#include <string>

#include "milnli/corpus/instance.hpp"

namespace milnli {

/// Token-level explanation of one prediction: the selected positions in
/// each sentence with a score per selected token.
struct Explanation {
  std::string method;
  IndexSet premise;
  IndexSet hypothesis;
  std::map<std::size_t, double> premise_scores;
  std::map<std::size_t, double> hypothesis_scores;
  double seconds = 0.0;

  const IndexSet& indices(Side side) const {
    return side == Side::kPremise ? premise : hypothesis;
  }
  IndexSet& indices(Side side) { return side == Side::kPremise ? premise : hypothesis; }
  std::map<std::size_t, double>& scores(Side side) {
    return side == Side::kPremise ? premise_scores : hypothesis_scores;
  }
  const std::map<std::size_t, double>& scores(Side side) const {
    return side == Side::kPremise ? premise_scores : hypothesis_scores;
  }

  /// Throws ContractError if an index is outside the given lengths or a
  /// score is not finite.
  void validate(std::size_t premise_len, std::size_t hypothesis_len) const;
};

}  // namespace milnli
