#include "milnli/util/kv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "milnli/numerics/errors.hpp"

namespace milnli::kv {
namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>);

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::string* find(const Map& m, const std::string& key) {
  auto it = m.find(key);
  return it == m.end() ? nullptr : &it->second;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("config key '" + key + "': '" + value + "' is not " + want);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text, const char* want) {
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) bad(key, text, want);
  return v;
}

}  // namespace

std::string format(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void read(const Map& m, const std::string& key, double& out) {
  if (auto v = find(m, key)) out = parse_number<double>(key, *v, "a number");
}

void read(const Map& m, const std::string& key, std::size_t& out) {
  if (auto v = find(m, key)) out = parse_number<std::size_t>(key, *v, "a non-negative integer");
}

void read(const Map& m, const std::string& key, bool& out) {
  auto v = find(m, key);
  if (!v) return;
  if (*v == "true" || *v == "1" || *v == "yes") out = true;
  else if (*v == "false" || *v == "0" || *v == "no") out = false;
  else bad(key, *v, "a boolean");
}

void read(const Map& m, const std::string& key, std::string& out) {
  if (auto v = find(m, key)) out = *v;
}

void read(const Map& m, const std::string& key, std::vector<double>& out) {
  auto v = find(m, key);
  if (!v) return;
  std::vector<double> values;
  std::stringstream in(*v);
  std::string part;
  while (std::getline(in, part, ',')) {
    part = trim(part);
    if (!part.empty()) values.push_back(parse_number<double>(key, part, "a number list"));
  }
  out = std::move(values);
}

void read(const Map& m, const std::string& key, std::vector<std::string>& out) {
  auto v = find(m, key);
  if (!v) return;
  std::vector<std::string> items;
  std::stringstream in(*v);
  std::string part;
  while (std::getline(in, part, ',')) {
    part = trim(part);
    if (!part.empty()) items.push_back(part);
  }
  out = std::move(items);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::string join(const std::vector<double>& items) {
  std::vector<std::string> text;
  for (double v : items) text.push_back(format(v));
  return join(text);
}

Map with_prefix(const Map& m, const std::string& prefix) {
  Map out;
  for (auto it = m.lower_bound(prefix); it != m.end() && it->first.rfind(prefix, 0) == 0; ++it) {
    out.insert(*it);
  }
  return out;
}

Map parse(const std::string& text) {
  Map out;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

Map load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string render(const Map& m) {
  std::string out;
  for (const auto& [k, v] : m) out += k + " = " + v + "\n";
  return out;
}

}  // namespace milnli::kv
