#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "milnli/corpus/embeddings.hpp"
#include "milnli/corpus/instance.hpp"
#include "milnli/corpus/vocabulary.hpp"

namespace milnli {

// Templated sentence pairs over a ~100 word vocabulary. Each pair carries one
// keyword per sentence; the label is a fixed function of the two keywords
// (same group => entails, opposite group => contradicts, anything else =>
// neutral) and the keywords are the gold highlights. Following the e-SNLI
// convention, neutral pairs highlight only the hypothesis keyword.
struct SyntheticOptions {
  std::size_t train = 2000;
  std::size_t dev = 500;
  std::size_t test = 500;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<SentencePairInstance> train;
  std::vector<SentencePairInstance> dev;
  std::vector<SentencePairInstance> test;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options);

struct SyntheticEmbeddingOptions {
  std::size_t dim = 32;
  std::uint64_t seed = 1;
  double filler_stddev = 0.5;
  /// Spread of the per-group centroids shared by the keywords of a group.
  double centroid_stddev = 2.0;
  /// Per-keyword deviation from its group centroid.
  double keyword_stddev = 0.25;
};

/// Stand-in for pretrained vectors: keywords of a group lie close together
/// and stand out from the filler words, which get plain Gaussian rows.
EmbeddingTable synthetic_embeddings(const Vocabulary& vocab,
                                    const SyntheticEmbeddingOptions& options = {});

/// Label the generator assigns to a premise/hypothesis keyword pair.
Label synthetic_relation(std::size_t premise_keyword, std::size_t hypothesis_keyword);
std::size_t synthetic_keyword_count();
/// Index of `token` among the keywords, or synthetic_keyword_count().
std::size_t synthetic_keyword_index(const std::string& token);

}  // namespace milnli
