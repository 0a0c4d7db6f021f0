#include "milnli/explain/explanation.hpp"

#include <cmath>

#include "milnli/numerics/errors.hpp"

namespace milnli {

void Explanation::validate(std::size_t premise_len, std::size_t hypothesis_len) const {
  auto check = [](const IndexSet& idx, const std::map<std::size_t, double>& scores,
                  std::size_t len, const char* side) {
    if (!idx.empty() && *idx.rbegin() >= len) {
      throw ContractError(std::string(side) + " explanation index out of range");
    }
    for (const auto& [i, s] : scores) {
      if (i >= len) throw ContractError(std::string(side) + " score index out of range");
      if (!std::isfinite(s)) throw ContractError(std::string(side) + " score not finite");
    }
  };
  check(premise, premise_scores, premise_len, "premise");
  check(hypothesis, hypothesis_scores, hypothesis_len, "hypothesis");
}

}  // namespace milnli
