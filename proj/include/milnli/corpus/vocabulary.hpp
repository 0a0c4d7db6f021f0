#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "milnli/corpus/instance.hpp"

namespace milnli {

using TokenId = std::int32_t;
using TokenIds = std::vector<TokenId>;

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary();

  /// Id of `token`, inserting it if new.
  TokenId add(const std::string& token);
  /// Id of `token`, or kUnk.
  TokenId id(const std::string& token) const;
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenIds encode(std::span<const std::string> tokens) const;

  /// FNV-1a over the id-ordered token list; identifies a vocabulary in
  /// checkpoints.
  std::uint64_t hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// A sentence pair mapped to vocabulary ids.
struct EncodedInstance {
  TokenIds premise;
  TokenIds hypothesis;
  Label label = Label::kNeutral;
  IndexSet premise_highlights;
  IndexSet hypothesis_highlights;

  const TokenIds& ids(Side side) const {
    return side == Side::kPremise ? premise : hypothesis;
  }
  const IndexSet& highlights(Side side) const {
    return side == Side::kPremise ? premise_highlights : hypothesis_highlights;
  }
};

EncodedInstance encode(const SentencePairInstance& instance, const Vocabulary& vocab);
std::vector<EncodedInstance> encode_all(std::span<const SentencePairInstance> instances,
                                        const Vocabulary& vocab);

/// Assigns ids in first-occurrence order (premise before hypothesis, instance
/// by instance).
Vocabulary build_vocab(std::span<const SentencePairInstance> instances);

}  // namespace milnli
