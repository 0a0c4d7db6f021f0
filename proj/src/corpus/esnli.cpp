#include "milnli/corpus/esnli.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>

#include "milnli/corpus/tokenizer.hpp"
#include "milnli/numerics/errors.hpp"
#include "milnli/util/log.hpp"

namespace milnli {
namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

struct Columns {
  std::size_t label = 0, premise = 0, hypothesis = 0;
  std::vector<std::size_t> premise_marked, hypothesis_marked;
  std::size_t count = 0;
};

Columns locate_columns(const std::vector<std::string>& header) {
  Columns cols;
  cols.count = header.size();
  std::optional<std::size_t> label, premise, hypothesis;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = lower(header[i]);
    if (name == "gold_label") label = i;
    else if (name == "sentence1") premise = i;
    else if (name == "sentence2") hypothesis = i;
    else if (starts_with(name, "sentence1_marked_")) cols.premise_marked.push_back(i);
    else if (starts_with(name, "sentence2_marked_")) cols.hypothesis_marked.push_back(i);
  }
  if (!label || !premise || !hypothesis) {
    throw FormatError("e-SNLI header lacks gold_label/Sentence1/Sentence2 columns");
  }
  cols.label = *label;
  cols.premise = *premise;
  cols.hypothesis = *hypothesis;
  return cols;
}

// Highlights of every annotator's marked sentence, or nullopt if any marked
// tokenization disagrees with the plain sentence.
std::optional<IndexSet> collect_highlights(const std::vector<std::string>& record,
                                           const std::vector<std::size_t>& marked_cols,
                                           const Tokens& plain) {
  std::vector<IndexSet> sets;
  for (std::size_t col : marked_cols) {
    const std::string& text = record[col];
    if (text.empty()) continue;
    MarkedTokens marked = tokenize_marked(text);
    if (marked.tokens != plain) return std::nullopt;
    sets.push_back(std::move(marked.highlighted));
  }
  if (sets.empty()) return IndexSet{};
  return union_annotations(sets);
}

}  // namespace

IndexSet union_annotations(std::span<const IndexSet> sets) {
  IndexSet out;
  for (const auto& s : sets) out.insert(s.begin(), s.end());
  return out;
}

bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  char c;
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return true;
}

std::vector<SentencePairInstance> read_esnli(std::istream& in, EsnliLoadStats* stats) {
  EsnliLoadStats local;
  EsnliLoadStats& st = stats ? *stats : local;
  st = EsnliLoadStats{};

  std::vector<std::string> record;
  if (!read_csv_record(in, record)) throw FormatError("e-SNLI file is empty");
  const Columns cols = locate_columns(record);

  std::vector<SentencePairInstance> out;
  std::size_t line = 1;
  while (read_csv_record(in, record)) {
    ++line;
    if (record.size() == 1 && record[0].empty()) continue;
    ++st.rows;
    auto skip = [&](const std::string& why) {
      ++st.skipped_malformed;
      log::warning("e-SNLI record " + std::to_string(line) + " skipped: " + why);
    };
    if (record.size() != cols.count) {
      skip("expected " + std::to_string(cols.count) + " fields, found " +
           std::to_string(record.size()));
      continue;
    }
    if (record[cols.label] == "-") {
      ++st.dropped_no_gold;
      continue;
    }
    SentencePairInstance inst;
    try {
      inst.label = parse_label(record[cols.label]);
    } catch (const FormatError& e) {
      skip(e.what());
      continue;
    }
    inst.premise = tokenize(record[cols.premise]);
    inst.hypothesis = tokenize(record[cols.hypothesis]);
    if (inst.premise.empty() || inst.hypothesis.empty()) {
      skip("empty sentence");
      continue;
    }
    auto premise_hl = collect_highlights(record, cols.premise_marked, inst.premise);
    auto hypothesis_hl = collect_highlights(record, cols.hypothesis_marked, inst.hypothesis);
    if (!premise_hl || !hypothesis_hl) {
      skip("marked sentence does not align with its tokenization");
      continue;
    }
    inst.premise_highlights = std::move(*premise_hl);
    inst.hypothesis_highlights = std::move(*hypothesis_hl);
    out.push_back(std::move(inst));
    ++st.loaded;
  }
  if (st.skipped_malformed) {
    log::warning("e-SNLI: skipped " + std::to_string(st.skipped_malformed) +
                 " malformed records");
  }
  return out;
}

std::vector<SentencePairInstance> load_esnli(const std::filesystem::path& path,
                                             EsnliLoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read e-SNLI file " + path.string());
  return read_esnli(in, stats);
}

}  // namespace milnli
