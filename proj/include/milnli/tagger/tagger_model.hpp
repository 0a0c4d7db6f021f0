#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "milnli/explain/explanation.hpp"
#include "milnli/model/entail_model.hpp"
#include "milnli/model/trainer.hpp"
#include "milnli/tagger/crf.hpp"

namespace milnli {

struct TaggerConfig {
  ModelConfig model;
  /// Weight of the two tagging losses together, relative to classification;
  /// each side gets half.
  double tagging_weight = 1.0;

  std::map<std::string, std::string> to_map() const;
  static TaggerConfig from_map(const std::map<std::string, std::string>& kv);
};

struct TaggerPrediction {
  ClassDistribution probs{};
  TagSequence premise_tags;
  TagSequence hypothesis_tags;
  /// Posterior probability that each token is highlighted.
  std::vector<double> premise_marginals;
  std::vector<double> hypothesis_marginals;

  Label label() const;
};

/// Token features for the tagger: row i of `states` scaled by attention weight i.
Var crf_inputs(Var states, Var attention);

/// 1 at highlighted positions.
TagSequence gold_tags(const IndexSet& highlights, std::size_t length);

// The entailment model with a linear-chain CRF tagger per sentence on top of
// the attended encodings. Shares encoder, attention and classifier with
// EntailModel; the CRF parameters live in the same ParameterSet under
// "crf.p.*" and "crf.h.*".
class TaggerModel {
 public:
  TaggerModel(TaggerConfig config, std::shared_ptr<const EmbeddingTable> embeddings);
  TaggerModel(TaggerConfig config, std::shared_ptr<const EmbeddingTable> embeddings,
              ParameterSet params);

  const TaggerConfig& config() const { return config_; }
  const EntailModel& entail() const { return model_; }
  const ParameterSet& params() const { return model_.params(); }
  ParameterSet& params() { return model_.params(); }

  /// Emission scores [len x 2] for one side.
  Var emissions(ParamBinder& bind, Side side, Var states, Var attention) const;
  /// Classification NLL plus the weighted CRF NLLs of both sides.
  Var joint_loss(ParamBinder& bind, const EncodedInstance& instance) const;
  /// Same with an explicit tagging weight.
  Var joint_loss(ParamBinder& bind, const EncodedInstance& instance, double tagging_weight) const;
  TaggerPrediction predict(std::span<const TokenId> premise,
                           std::span<const TokenId> hypothesis) const;
  CrfParams crf_params(Side side) const;

 private:
  TaggerConfig config_;
  EntailModel model_;
};

/// CRF parameters for both sides, appended to `params`.
void add_crf_params(ParameterSet& params, std::size_t hidden, std::uint64_t seed);

/// Highlighted tokens of the Viterbi decode; scores are the tag-1 marginals.
Explanation tagger_explanation(const TaggerPrediction& prediction);

struct TaggerTrainResult {
  TaggerModel model;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
};

/// Dev accuracy and Viterbi token F1 per side (tau is unused).
DevScores evaluate_tagger(const TaggerModel& model, std::span<const EncodedInstance> dev);

struct TaggerTrainConfig {
  FitOptions fit;
  /// Epochs of classification loss alone before the tagging losses join.
  std::size_t warmup_epochs = 5;
};

/// Joint training; keeps the post-warmup epoch with the best dev hypothesis
/// F1, ties going to higher accuracy.
TaggerTrainResult train_tagger(TaggerModel initial, std::span<const EncodedInstance> train,
                               std::span<const EncodedInstance> dev,
                               const TaggerTrainConfig& config);

}  // namespace milnli
