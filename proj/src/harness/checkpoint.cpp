#include "milnli/harness/checkpoint.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "milnli/numerics/errors.hpp"

namespace milnli {
namespace {

constexpr const char* kMagic = "milnli-checkpoint 1";

void write_numbers(std::ostream& out, std::span<const double> values) {
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    out << (i ? " " : "") << buf;
  }
  out << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string line() {
    std::string s;
    if (!std::getline(in_, s)) fail("unexpected end of file");
    ++lineno_;
    return s;
  }

  // Reads a header line "<word> <fields...>" and returns the fields.
  std::istringstream header(const std::string& word) {
    std::istringstream fields(line());
    std::string w;
    fields >> w;
    if (w != word) fail("expected '" + word + "', found '" + w + "'");
    return fields;
  }

  std::vector<double> numbers(std::size_t count) {
    std::istringstream fields(line());
    std::vector<double> out(count);
    for (auto& v : out) {
      std::string tok;
      if (!(fields >> tok)) fail("too few numbers");
      try {
        std::size_t used = 0;
        v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail("bad number '" + tok + "'");
      }
    }
    std::string extra;
    if (fields >> extra) fail("too many numbers");
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("checkpoint line " + std::to_string(lineno_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::size_t lineno_ = 0;
};

Tensor read_tensor(Reader& r, std::string& name) {
  auto fields = r.header("tensor");
  std::size_t rank = 0;
  if (!(fields >> name >> rank)) r.fail("bad tensor header");
  Shape shape(rank);
  for (auto& d : shape) {
    if (!(fields >> d)) r.fail("bad tensor shape");
  }
  Tensor t(shape);
  const std::vector<double> values = r.numbers(t.size());
  std::copy(values.begin(), values.end(), t.values().begin());
  return t;
}

void write_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  out << "tensor " << name << ' ' << t.rank();
  for (std::size_t d : t.shape()) out << ' ' << d;
  out << '\n';
  write_numbers(out, t.values());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  if (!c.embeddings) throw ContractError("checkpoint without embeddings");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << kMagic << '\n' << "kind " << c.kind << '\n';
  out << "config " << c.config.size() << '\n';
  for (const auto& [k, v] : c.config) out << k << " = " << v << '\n';
  out << "vocab " << c.vocab.size() << ' ' << c.vocab.hash() << '\n';
  for (const auto& tok : c.vocab.tokens()) out << tok << '\n';
  write_tensor(out, "embeddings", c.embeddings->matrix());
  out << "params " << c.params.size() << '\n';
  for (std::size_t i = 0; i < c.params.size(); ++i) write_tensor(out, c.params.name(i), c.params.value(i));
  out << "end\n";
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  Reader r(in);
  if (r.line() != kMagic) r.fail("not a checkpoint");
  Checkpoint c;
  r.header("kind") >> c.kind;
  if (c.kind != "entail" && c.kind != "tagger") r.fail("unknown kind '" + c.kind + "'");

  std::size_t count = 0;
  if (!(r.header("config") >> count)) r.fail("bad config header");
  std::string text;
  for (std::size_t i = 0; i < count; ++i) text += r.line() + '\n';
  c.config = kv::parse(text);

  std::uint64_t hash = 0;
  auto vh = r.header("vocab");
  if (!(vh >> count >> hash)) r.fail("bad vocab header");
  if (count < 2) r.fail("vocabulary lacks reserved tokens");
  std::vector<std::string> tokens(count);
  for (auto& t : tokens) t = r.line();
  if (tokens[0] != Vocabulary::kPadToken || tokens[1] != Vocabulary::kUnkToken) {
    r.fail("vocabulary does not start with the reserved tokens");
  }
  for (std::size_t i = 2; i < count; ++i) c.vocab.add(tokens[i]);
  if (c.vocab.size() != count) r.fail("duplicate vocabulary tokens");
  if (c.vocab.hash() != hash) r.fail("vocabulary hash mismatch");

  std::string name;
  Tensor emb = read_tensor(r, name);
  if (name != "embeddings" || emb.rank() != 2 || emb.rows() != count) {
    r.fail("embedding table does not match the vocabulary");
  }
  c.embeddings = std::make_shared<const EmbeddingTable>(std::move(emb));

  if (!(r.header("params") >> count)) r.fail("bad params header");
  for (std::size_t i = 0; i < count; ++i) {
    Tensor t = read_tensor(r, name);
    if (c.params.find(name)) r.fail("duplicate parameter '" + name + "'");
    c.params.add(name, std::move(t));
  }
  if (r.line() != "end") r.fail("missing end marker");
  return c;
}

Checkpoint make_checkpoint(const EntailModel& model, const Vocabulary& vocab, kv::Map extra) {
  Checkpoint c{"entail", model.config().to_map(), vocab, model.embeddings_ptr(), model.params()};
  c.config.merge(extra);
  return c;
}

Checkpoint make_checkpoint(const TaggerModel& model, const Vocabulary& vocab, kv::Map extra) {
  Checkpoint c{"tagger", model.config().to_map(), vocab, model.entail().embeddings_ptr(),
               model.params()};
  c.config.merge(extra);
  return c;
}

EntailModel entail_from(const Checkpoint& c) {
  if (c.kind != "entail") throw ContractError("checkpoint holds a " + c.kind + " model");
  return EntailModel(ModelConfig::from_map(c.config), c.embeddings, c.params);
}

TaggerModel tagger_from(const Checkpoint& c) {
  if (c.kind != "tagger") throw ContractError("checkpoint holds a " + c.kind + " model");
  return TaggerModel(TaggerConfig::from_map(c.config), c.embeddings, c.params);
}

}  // namespace milnli
