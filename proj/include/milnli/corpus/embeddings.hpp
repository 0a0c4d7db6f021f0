#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "milnli/corpus/vocabulary.hpp"
#include "milnli/numerics/tensor.hpp"

namespace milnli {

// Frozen |V| x d lookup table. Never part of a ParameterSet, so no optimizer
// can touch it.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(Tensor matrix);

  std::size_t vocab_size() const { return matrix_.rows(); }
  std::size_t dim() const { return matrix_.cols(); }
  const Tensor& matrix() const { return matrix_; }

  /// [ids.size() x d] matrix of rows. Throws ContractError on ids outside
  /// the table.
  Tensor lookup(std::span<const TokenId> ids) const;

 private:
  Tensor matrix_{Shape{0, 0}};
};

struct EmbeddingOptions {
  /// Required width; inferred from the first line when unset.
  std::optional<std::size_t> dim;
  std::uint64_t oov_seed = 42;
  double oov_stddev = 0.1;
};

/// Reads `token v1 ... vd` lines. In-vocabulary rows are copied verbatim;
/// vocabulary tokens missing from the file are drawn from N(0, stddev^2)
/// with a fixed seed; pad and unk rows are zero. Throws IoError if the file
/// cannot be read and FormatError (with line number) on inconsistent widths.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                               const EmbeddingOptions& options = {});

/// Table with every non-reserved row drawn from N(0, stddev^2).
EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim,
                                 std::uint64_t seed, double stddev = 0.1);

void save_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                     const EmbeddingTable& table);

}  // namespace milnli
