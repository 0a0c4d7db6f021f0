#include "milnli/harness/metrics.hpp"

#include <vector>

#include "milnli/numerics/errors.hpp"

namespace milnli {
namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

SideScores score_side(std::span<const Explanation> predicted, std::span<const GoldHighlights> gold,
                      Side side, Averaging averaging) {
  SideScores s;
  std::size_t total_tokens = 0, total_gold = 0;
  double precision_sum = 0.0, recall_sum = 0.0;
  std::size_t precision_n = 0, recall_n = 0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const IndexSet& pred = predicted[k].indices(side);
    const GoldHighlights& g = gold[k];
    const IndexSet& truth = side == Side::kPremise ? g.premise : g.hypothesis;
    total_tokens += side == Side::kPremise ? g.premise_len : g.hypothesis_len;
    total_gold += truth.size();
    std::size_t tp = 0;
    for (std::size_t i : pred) tp += truth.count(i);
    const std::size_t fp = pred.size() - tp;
    const std::size_t fn = truth.size() - tp;
    s.true_positives += tp;
    s.false_positives += fp;
    s.false_negatives += fn;
    if (truth.empty()) ++s.empty_gold;
    if (!pred.empty()) {
      precision_sum += static_cast<double>(tp) / static_cast<double>(pred.size());
      ++precision_n;
    }
    if (!truth.empty()) {
      recall_sum += static_cast<double>(tp) / static_cast<double>(truth.size());
      ++recall_n;
    }
  }
  if (averaging == Averaging::kMicro) {
    s.precision = percent(s.true_positives, s.true_positives + s.false_positives);
    s.recall = percent(s.true_positives, s.true_positives + s.false_negatives);
  } else {
    s.precision = precision_n ? 100.0 * precision_sum / static_cast<double>(precision_n) : 0.0;
    s.recall = recall_n ? 100.0 * recall_sum / static_cast<double>(recall_n) : 0.0;
  }
  s.f1 = harmonic_mean(s.precision, s.recall);
  s.select_all_precision = percent(total_gold, total_tokens);
  return s;
}

}  // namespace

std::string_view averaging_name(Averaging a) {
  return a == Averaging::kMicro ? "micro" : "macro";
}

double harmonic_mean(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

GoldHighlights gold_of(const SentencePairInstance& instance) {
  return {instance.premise_highlights, instance.hypothesis_highlights, instance.premise.size(),
          instance.hypothesis.size()};
}

GoldHighlights gold_of(const EncodedInstance& instance) {
  return {instance.premise_highlights, instance.hypothesis_highlights, instance.premise.size(),
          instance.hypothesis.size()};
}

TokenScoreReport token_prf(std::span<const Explanation> predicted,
                           std::span<const GoldHighlights> gold, Averaging averaging) {
  if (predicted.size() != gold.size()) {
    throw ContractError("token_prf: " + std::to_string(predicted.size()) +
                        " explanations for " + std::to_string(gold.size()) + " instances");
  }
  TokenScoreReport r;
  r.instances = gold.size();
  r.averaging = averaging;
  r.premise = score_side(predicted, gold, Side::kPremise, averaging);
  r.hypothesis = score_side(predicted, gold, Side::kHypothesis, averaging);
  return r;
}

TokenScoreReport token_prf(std::span<const Explanation> predicted,
                           std::span<const SentencePairInstance> gold, Averaging averaging) {
  std::vector<GoldHighlights> g;
  g.reserve(gold.size());
  for (const auto& inst : gold) g.push_back(gold_of(inst));
  return token_prf(predicted, g, averaging);
}

TokenScoreReport token_prf(std::span<const Explanation> predicted,
                           std::span<const EncodedInstance> gold, Averaging averaging) {
  std::vector<GoldHighlights> g;
  g.reserve(gold.size());
  for (const auto& inst : gold) g.push_back(gold_of(inst));
  return token_prf(predicted, g, averaging);
}

Explanation select_all(const GoldHighlights& gold) {
  Explanation e;
  e.method = "select_all";
  for (std::size_t i = 0; i < gold.premise_len; ++i) e.premise.insert(i);
  for (std::size_t j = 0; j < gold.hypothesis_len; ++j) e.hypothesis.insert(j);
  return e;
}

}  // namespace milnli
