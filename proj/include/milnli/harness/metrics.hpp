#pragma once

#include <span>
#include <string_view>

#include "milnli/corpus/instance.hpp"
#include "milnli/corpus/vocabulary.hpp"
#include "milnli/explain/explanation.hpp"

namespace milnli {

enum class Averaging { kMicro, kMacro };
std::string_view averaging_name(Averaging a);

struct SideScores {
  // Percentages in [0, 100].
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  /// Instances whose gold set on this side is empty (no recall defined).
  std::size_t empty_gold = 0;
  /// Precision of selecting every token, as a percentage.
  double select_all_precision = 0.0;
};

struct TokenScoreReport {
  SideScores premise;
  SideScores hypothesis;
  std::size_t instances = 0;
  Averaging averaging = Averaging::kMicro;

  const SideScores& side(Side s) const { return s == Side::kPremise ? premise : hypothesis; }
};

/// Gold highlights and sentence lengths of one instance.
struct GoldHighlights {
  IndexSet premise;
  IndexSet hypothesis;
  std::size_t premise_len = 0;
  std::size_t hypothesis_len = 0;
};

GoldHighlights gold_of(const SentencePairInstance& instance);
GoldHighlights gold_of(const EncodedInstance& instance);

/// Token-level precision/recall/F1 per side. Micro averaging pools token
/// counts over instances; macro averages per-instance precision over
/// instances with predictions and per-instance recall over instances with
/// gold highlights. F1 is the harmonic mean of the reported P and R.
/// Throws ContractError when the lists differ in length.
TokenScoreReport token_prf(std::span<const Explanation> predicted,
                           std::span<const GoldHighlights> gold,
                           Averaging averaging = Averaging::kMicro);
TokenScoreReport token_prf(std::span<const Explanation> predicted,
                           std::span<const SentencePairInstance> gold,
                           Averaging averaging = Averaging::kMicro);
TokenScoreReport token_prf(std::span<const Explanation> predicted,
                           std::span<const EncodedInstance> gold,
                           Averaging averaging = Averaging::kMicro);

/// Explanation selecting every token of both sentences.
Explanation select_all(const GoldHighlights& gold);

double harmonic_mean(double p, double r);

}  // namespace milnli
