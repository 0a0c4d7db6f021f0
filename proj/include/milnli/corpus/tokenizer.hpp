#pragma once

#include <string_view>

#include "milnli/corpus/instance.hpp"

namespace milnli {

/// Lowercases ASCII letters, splits on whitespace, and emits every ASCII
/// punctuation character as a token of its own.
Tokens tokenize(std::string_view text);

struct MarkedTokens {
  Tokens tokens;
  IndexSet highlighted;
};

/// Tokenizes e-SNLI marked text, where highlighted words are wrapped in
/// asterisks (`*smiling*`). Asterisks are removed; a token is highlighted if
/// any of its characters sat between a pair of asterisks.
MarkedTokens tokenize_marked(std::string_view text);

}  // namespace milnli
