#pragma once

#include <array>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace milnli {

enum class Label { kEntails = 0, kContradicts = 1, kNeutral = 2 };
inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<Label, kNumLabels> kAllLabels = {
    Label::kEntails, Label::kContradicts, Label::kNeutral};

std::string_view label_name(Label label);
/// Accepts "entails"/"entailment", "contradicts"/"contradiction", "neutral".
/// Throws FormatError otherwise.
Label parse_label(std::string_view text);
inline std::size_t label_index(Label label) { return static_cast<std::size_t>(label); }

using Tokens = std::vector<std::string>;
using IndexSet = std::set<std::size_t>;

enum class Side { kPremise, kHypothesis };
std::string_view side_name(Side side);

struct SentencePairInstance {
  Tokens premise;
  Tokens hypothesis;
  Label label = Label::kNeutral;
  IndexSet premise_highlights;
  IndexSet hypothesis_highlights;

  const Tokens& tokens(Side side) const {
    return side == Side::kPremise ? premise : hypothesis;
  }
  const IndexSet& highlights(Side side) const {
    return side == Side::kPremise ? premise_highlights : hypothesis_highlights;
  }

  /// Throws FormatError on empty sentences or out-of-range highlights.
  void validate() const;

  friend bool operator==(const SentencePairInstance&, const SentencePairInstance&) = default;
};

}  // namespace milnli
