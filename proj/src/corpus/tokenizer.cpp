#include "milnli/corpus/tokenizer.hpp"

#include <cctype>

namespace milnli {
namespace {

// Shared scanner. `marker` toggles the highlight state and is otherwise
// dropped; pass '\0' to treat every character as text.
MarkedTokens scan(std::string_view text, char marker) {
  MarkedTokens out;
  std::string current;
  bool current_marked = false;
  bool inside = false;

  auto flush = [&] {
    if (current.empty()) return;
    if (current_marked) out.highlighted.insert(out.tokens.size());
    out.tokens.push_back(std::move(current));
    current.clear();
    current_marked = false;
  };

  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (marker != '\0' && raw == marker) {
      inside = !inside;
      continue;
    }
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      current.push_back(raw);
      current_marked = inside;
      flush();
    } else {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
      current_marked = current_marked || inside;
    }
  }
  flush();
  return out;
}

}  // namespace

Tokens tokenize(std::string_view text) { return scan(text, '\0').tokens; }

MarkedTokens tokenize_marked(std::string_view text) { return scan(text, '*'); }

}  // namespace milnli
