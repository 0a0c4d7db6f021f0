#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "milnli/corpus/embeddings.hpp"
#include "milnli/corpus/instance.hpp"
#include "milnli/corpus/vocabulary.hpp"
#include "milnli/numerics/tape.hpp"

namespace milnli {

/// How the attention distributions feed the classifier.
enum class Pooling {
  /// c = sum_i a_i h_i over all tokens.
  kWeightedSum,
  /// c = a_last * h_last, the final token only.
  kFinalToken,
};

struct ModelConfig {
  std::size_t hidden = 200;
  std::size_t attend_dim = 200;
  /// Widths of the ReLU layers of the classifier; a 3-way output layer follows.
  std::vector<std::size_t> classifier_dims = {200, 200};
  Pooling pooling = Pooling::kWeightedSum;
  std::uint64_t seed = 1;
  double forget_bias = 1.0;
  double attend_bias = 0.1;
  /// Added to every raw score before L1 normalization. Keeps the
  /// distributions continuous as the scores of a sentence approach zero;
  /// thresholding still reads the unsmoothed scores. 0 gives the plain
  /// normalization with a uniform fallback.
  double score_smoothing = 0.01;

  std::map<std::string, std::string> to_map() const;
  /// Reads the keys written by to_map(); missing keys keep their defaults.
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
};

using ClassDistribution = std::array<double, kNumLabels>;

/// Values of the attention computation for one pair.
struct AttentionOutputs {
  /// m x n, non-negative: scores(i, j) = u_i . v_j.
  Tensor scores;
  /// Simplex over premise tokens, from the last column of `scores`.
  std::vector<double> premise;
  /// Simplex over hypothesis tokens, from the last row of `scores`.
  std::vector<double> hypothesis;

  /// Unnormalized scores behind `premise` / `hypothesis`.
  std::vector<double> raw(Side side) const;
  const std::vector<double>& dist(Side side) const {
    return side == Side::kPremise ? premise : hypothesis;
  }
};

struct Prediction {
  ClassDistribution probs{};
  AttentionOutputs attention;

  Label label() const;
};

/// Tape nodes of one forward pass, for loss construction.
struct AttentionVars {
  Var scores;           // [m x n]
  Var premise_dist;     // [m]
  Var hypothesis_dist;  // [n]
};

struct ForwardVars {
  Var premise_states;     // [m x H]
  Var hypothesis_states;  // [n x H]
  AttentionVars attention;
  Var probs;  // [3]
};

// Sentence-pair classifier: frozen embeddings, one LSTM shared by both
// sentences, ReLU-projected inner-product attention normalized with an L1
// norm, and a feed-forward classifier over the attended encodings.
//
// Instances are immutable after training; const members may be called from
// any number of threads.
class EntailModel {
 public:
  EntailModel(ModelConfig config, std::shared_ptr<const EmbeddingTable> embeddings);
  EntailModel(ModelConfig config, std::shared_ptr<const EmbeddingTable> embeddings,
              ParameterSet params);

  const ModelConfig& config() const { return config_; }
  const EmbeddingTable& embeddings() const { return *embeddings_; }
  std::shared_ptr<const EmbeddingTable> embeddings_ptr() const { return embeddings_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& params() { return params_; }

  /// LSTM states [len x H]. Throws ContractError on an empty sentence or ids
  /// outside the embedding table.
  Var encode_sentence(ParamBinder& bind, std::span<const TokenId> tokens) const;
  AttentionVars attend(ParamBinder& bind, Var premise_states, Var hypothesis_states) const;
  /// Class distribution [3] from attention and states.
  Var classify(ParamBinder& bind, const AttentionVars& attention, Var premise_states,
               Var hypothesis_states) const;
  ForwardVars forward(ParamBinder& bind, std::span<const TokenId> premise,
                      std::span<const TokenId> hypothesis) const;

  /// Gradient-free forward pass.
  Prediction predict(std::span<const TokenId> premise,
                     std::span<const TokenId> hypothesis) const;

  /// Number of times attend() fell back to a uniform distribution because a
  /// score row or column was all zero (process-wide).
  static std::size_t uniform_fallbacks();

 private:
  ModelConfig config_;
  std::shared_ptr<const EmbeddingTable> embeddings_;
  ParameterSet params_;
};

/// Fresh parameters for `config` over embeddings of width `embedding_dim`.
ParameterSet init_entail_params(const ModelConfig& config, std::size_t embedding_dim);

AttentionOutputs attention_values(const AttentionVars& vars);

}  // namespace milnli
