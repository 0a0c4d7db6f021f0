#include "milnli/corpus/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "milnli/numerics/errors.hpp"

namespace milnli {
namespace {

bool is_reserved(std::size_t row) {
  return row == static_cast<std::size_t>(Vocabulary::kPad) ||
         row == static_cast<std::size_t>(Vocabulary::kUnk);
}

// Splits on runs of spaces/tabs.
std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_real(std::string_view text, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("embeddings line " + std::to_string(line_no) + ": bad number '" +
                      std::string(text) + "'");
  }
  return v;
}

}  // namespace

EmbeddingTable::EmbeddingTable(Tensor matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rank() != 2) throw ShapeError("embedding table must be a matrix");
}

Tensor EmbeddingTable::lookup(std::span<const TokenId> ids) const {
  const std::size_t d = dim();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const TokenId id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size()) {
      throw ContractError("token id " + std::to_string(id) + " outside embedding table of " +
                          std::to_string(vocab_size()) + " rows");
    }
    std::copy_n(&matrix_.at(static_cast<std::size_t>(id), 0), d, &out.at(i, 0));
  }
  return out;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                               const EmbeddingOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read embeddings from " + path.string());

  std::optional<std::size_t> dim = options.dim;
  std::vector<std::vector<double>> rows(vocab.size());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto parts = fields(line);
    if (parts.empty()) continue;
    const std::size_t width = parts.size() - 1;
    if (!dim) dim = width;
    if (width != *dim || width == 0) {
      throw FormatError("embeddings line " + std::to_string(line_no) + ": expected " +
                        std::to_string(*dim) + " values, found " + std::to_string(width));
    }
    const std::string token(parts[0]);
    if (!vocab.contains(token)) continue;
    const auto id = static_cast<std::size_t>(vocab.id(token));
    if (is_reserved(id)) continue;
    std::vector<double> v(width);
    for (std::size_t k = 0; k < width; ++k) v[k] = parse_real(parts[k + 1], line_no);
    rows[id] = std::move(v);
  }
  if (!dim) throw FormatError("embeddings file " + path.string() + " has no vectors");

  Tensor matrix({vocab.size(), *dim}, 0.0);
  std::mt19937_64 rng(options.oov_seed);
  std::normal_distribution<double> noise(0.0, options.oov_stddev);
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    if (is_reserved(r)) continue;
    if (!rows[r].empty()) {
      std::copy(rows[r].begin(), rows[r].end(), &matrix.at(r, 0));
    } else {
      for (std::size_t k = 0; k < *dim; ++k) matrix.at(r, k) = noise(rng);
    }
  }
  return EmbeddingTable(std::move(matrix));
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim,
                                 std::uint64_t seed, double stddev) {
  Tensor matrix({vocab.size(), dim}, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, stddev);
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    if (is_reserved(r)) continue;
    for (std::size_t k = 0; k < dim; ++k) matrix.at(r, k) = noise(rng);
  }
  return EmbeddingTable(std::move(matrix));
}

void save_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                     const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embeddings to " + path.string());
  out.precision(17);
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    if (is_reserved(r)) continue;
    out << vocab.token(static_cast<TokenId>(r));
    for (std::size_t k = 0; k < table.dim(); ++k) out << ' ' << table.matrix().at(r, k);
    out << '\n';
  }
}

}  // namespace milnli
