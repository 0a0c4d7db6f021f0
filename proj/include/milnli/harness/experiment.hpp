#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "milnli/corpus/embeddings.hpp"
#include "milnli/corpus/vocabulary.hpp"
#include "milnli/explain/anchors.hpp"
#include "milnli/explain/attention_threshold.hpp"
#include "milnli/explain/lime.hpp"
#include "milnli/harness/benchmark.hpp"
#include "milnli/harness/metrics.hpp"
#include "milnli/harness/synthetic.hpp"
#include "milnli/model/trainer.hpp"
#include "milnli/tagger/tagger_model.hpp"
#include "milnli/util/kv.hpp"

namespace milnli {

/// Methods run_experiment knows about.
inline const std::vector<std::string> kKnownMethods = {"attention", "lime", "anchors", "tagger",
                                                       "select_all"};

struct ExperimentConfig {
  /// "synthetic", "jsonl" or "esnli".
  std::string corpus = "synthetic";
  std::string train_path, dev_path, test_path;
  SyntheticOptions synthetic;
  /// Word vectors; synthetic vectors (or random ones for real corpora) when empty.
  std::string embeddings_path;
  SyntheticEmbeddingOptions synthetic_embeddings;

  ModelConfig model;
  TrainConfig train;
  TaggerConfig tagger;
  TaggerTrainConfig tagger_train;

  std::vector<std::string> methods = {"attention", "lime", "anchors"};
  /// Test instances explained and scored; 0 means all.
  std::size_t explain_limit = 0;
  LimeOptions lime;
  AnchorOptions anchors;
  Averaging averaging = Averaging::kMicro;

  /// Load instead of training when set; save after training when set.
  std::string entail_checkpoint_in, entail_checkpoint_out;
  std::string tagger_checkpoint_in, tagger_checkpoint_out;

  std::string output_dir;
  std::size_t html_instances = 20;

  kv::Map to_map() const;
  /// Unknown keys are rejected so typos surface. Throws ConfigError.
  static ExperimentConfig from_map(const kv::Map& kv);
  /// ConfigError naming the first missing input file or unknown method.
  void check_inputs() const;
};

struct CorpusSplits {
  std::vector<SentencePairInstance> train, dev, test;
};

CorpusSplits load_corpus(const ExperimentConfig& config);
/// Vectors for `vocab` per the config.
EmbeddingTable make_embeddings(const ExperimentConfig& config, const Vocabulary& vocab);

struct PreparedData {
  CorpusSplits corpus;
  Vocabulary vocab;
  std::shared_ptr<const EmbeddingTable> embeddings;
  std::vector<EncodedInstance> train, dev, test;
};

/// Loads the corpus and encodes it. With `vocab` and `embeddings` given
/// (from a checkpoint) those are reused; otherwise the vocabulary covers all
/// three splits and the embeddings come from make_embeddings.
PreparedData prepare_data(const ExperimentConfig& config, const Vocabulary* vocab = nullptr,
                          std::shared_ptr<const EmbeddingTable> embeddings = nullptr);

struct MethodResult {
  std::string method;
  TokenScoreReport scores;
  RuntimeReport runtime;
  std::vector<std::optional<Explanation>> explanations;
};

struct ExperimentReport {
  kv::Map config;
  double dev_accuracy = 0.0;
  double test_accuracy = 0.0;
  double tau = 0.5;
  std::optional<double> tagger_test_accuracy;
  /// Test instances that were explained, in order.
  std::vector<SentencePairInstance> explained;
  std::vector<MethodResult> methods;
};

/// Builds the explanation function for `method` (see kKnownMethods).
/// Tagger needs `tagger`; the others need `model`.
ExplainMethod make_method(const std::string& method, const EntailModel* model,
                          const TaggerModel* tagger, const ThresholdOptions& threshold,
                          const LimeOptions& lime, const AnchorOptions& anchors);

/// Loads or trains the models, runs each method over the test split with a
/// single worker, and scores the explanations. Inputs are checked before any
/// compute. Writes the report files when output_dir is set.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// scores.jsonl (config plus score rows, reproducible), runtime.jsonl,
/// explanations_<method>.jsonl, report.txt and report.html.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir,
                  std::size_t html_instances);

}  // namespace milnli
