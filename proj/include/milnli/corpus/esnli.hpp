#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "milnli/corpus/instance.hpp"

namespace milnli {

IndexSet union_annotations(std::span<const IndexSet> sets);

struct EsnliLoadStats {
  std::size_t rows = 0;
  std::size_t loaded = 0;
  /// Rows whose gold label is "-" (no annotator majority).
  std::size_t dropped_no_gold = 0;
  /// Wrong column count, unknown label, empty sentence or a marked sentence
  /// whose tokens do not line up with the plain sentence.
  std::size_t skipped_malformed = 0;
};

/// Parses an e-SNLI CSV (header row required). Highlights come from every
/// `Sentence1_marked_*` / `Sentence2_marked_*` column and are unioned across
/// annotators.
std::vector<SentencePairInstance> read_esnli(std::istream& in, EsnliLoadStats* stats = nullptr);
/// Throws IoError if the file cannot be opened.
std::vector<SentencePairInstance> load_esnli(const std::filesystem::path& path,
                                             EsnliLoadStats* stats = nullptr);

/// RFC 4180 style record splitter: quoted fields, doubled quotes, embedded
/// newlines. Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields);

}  // namespace milnli
