#pragma once

#include <functional>
#include <span>

#include "milnli/corpus/vocabulary.hpp"
#include "milnli/model/entail_model.hpp"

namespace milnli {

/// Black-box view of a sentence-pair classifier. Must be deterministic and
/// safe to call from several threads at once.
using PairClassifierHandle = std::function<ClassDistribution(
    std::span<const TokenId> premise, std::span<const TokenId> hypothesis)>;

/// Handle over `model`, which must outlive it.
PairClassifierHandle classifier_handle(const EntailModel& model);

Label argmax_label(const ClassDistribution& probs);

}  // namespace milnli
