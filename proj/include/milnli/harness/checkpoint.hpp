#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "milnli/corpus/embeddings.hpp"
#include "milnli/corpus/vocabulary.hpp"
#include "milnli/model/entail_model.hpp"
#include "milnli/numerics/tape.hpp"
#include "milnli/tagger/tagger_model.hpp"
#include "milnli/util/kv.hpp"

namespace milnli {

// Self-contained text checkpoint: resolved config, vocabulary (with its
// hash), the frozen embedding table and every parameter tensor, numbers
// written with 17 significant digits so a reload is bit-exact.
struct Checkpoint {
  /// "entail" or "tagger".
  std::string kind;
  kv::Map config;
  Vocabulary vocab;
  std::shared_ptr<const EmbeddingTable> embeddings;
  ParameterSet params;
};

/// Throws IoError if the file cannot be written.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws IoError if unreadable, FormatError on malformed content or a
/// vocabulary that does not match its recorded hash.
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const EntailModel& model, const Vocabulary& vocab, kv::Map extra = {});
Checkpoint make_checkpoint(const TaggerModel& model, const Vocabulary& vocab, kv::Map extra = {});
/// ContractError if the checkpoint holds the other kind.
EntailModel entail_from(const Checkpoint& checkpoint);
TaggerModel tagger_from(const Checkpoint& checkpoint);

}  // namespace milnli
