#include "milnli/corpus/instance.hpp"

#include <string>

#include "milnli/numerics/errors.hpp"

namespace milnli {

std::string_view label_name(Label label) {
  switch (label) {
    case Label::kEntails: return "entails";
    case Label::kContradicts: return "contradicts";
    case Label::kNeutral: return "neutral";
  }
  return "?";
}

Label parse_label(std::string_view text) {
  if (text == "entails" || text == "entailment") return Label::kEntails;
  if (text == "contradicts" || text == "contradiction") return Label::kContradicts;
  if (text == "neutral") return Label::kNeutral;
  throw FormatError("unknown label '" + std::string(text) + "'");
}

std::string_view side_name(Side side) {
  return side == Side::kPremise ? "premise" : "hypothesis";
}

void SentencePairInstance::validate() const {
  if (premise.empty()) throw FormatError("empty premise");
  if (hypothesis.empty()) throw FormatError("empty hypothesis");
  if (!premise_highlights.empty() && *premise_highlights.rbegin() >= premise.size()) {
    throw FormatError("premise highlight index out of range");
  }
  if (!hypothesis_highlights.empty() &&
      *hypothesis_highlights.rbegin() >= hypothesis.size()) {
    throw FormatError("hypothesis highlight index out of range");
  }
}

}  // namespace milnli
