#include "milnli/explain/classifier_handle.hpp"

#include <algorithm>

namespace milnli {

PairClassifierHandle classifier_handle(const EntailModel& model) {
  return [&model](std::span<const TokenId> premise, std::span<const TokenId> hypothesis) {
    return model.predict(premise, hypothesis).probs;
  };
}

Label argmax_label(const ClassDistribution& probs) {
  const auto it = std::max_element(probs.begin(), probs.end());
  return kAllLabels[static_cast<std::size_t>(it - probs.begin())];
}

}  // namespace milnli
