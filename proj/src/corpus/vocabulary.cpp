#include "milnli/corpus/vocabulary.hpp"

#include "milnli/numerics/errors.hpp"

namespace milnli {

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
}

TokenId Vocabulary::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

TokenId Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ContractError("token id " + std::to_string(id) + " outside vocabulary of size " +
                        std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

TokenIds Vocabulary::encode(std::span<const std::string> tokens) const {
  TokenIds out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& t : tokens_) {
    for (char c : t) mix(static_cast<unsigned char>(c));
    mix(0);
  }
  return h;
}

EncodedInstance encode(const SentencePairInstance& instance, const Vocabulary& vocab) {
  return EncodedInstance{vocab.encode(instance.premise), vocab.encode(instance.hypothesis),
                         instance.label, instance.premise_highlights,
                         instance.hypothesis_highlights};
}

std::vector<EncodedInstance> encode_all(std::span<const SentencePairInstance> instances,
                                        const Vocabulary& vocab) {
  std::vector<EncodedInstance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(encode(inst, vocab));
  return out;
}

Vocabulary build_vocab(std::span<const SentencePairInstance> instances) {
  if (instances.empty()) throw ContractError("build_vocab needs at least one instance");
  Vocabulary vocab;
  for (const auto& inst : instances) {
    for (const auto& t : inst.premise) vocab.add(t);
    for (const auto& t : inst.hypothesis) vocab.add(t);
  }
  return vocab;
}

}  // namespace milnli
