#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace milnli::kv {

using Map = std::map<std::string, std::string>;

/// Shortest decimal text that reads back to the same double.
std::string format(double value);

// Each reader leaves `out` untouched when `key` is absent and throws
// ConfigError naming the key when the value does not parse.
void read(const Map& m, const std::string& key, double& out);
/// Also serves std::uint64_t, which is the same type on the supported targets.
void read(const Map& m, const std::string& key, std::size_t& out);
void read(const Map& m, const std::string& key, bool& out);
void read(const Map& m, const std::string& key, std::string& out);
/// Comma-separated numbers.
void read(const Map& m, const std::string& key, std::vector<double>& out);
/// Comma-separated words, surrounding blanks trimmed, empty items dropped.
void read(const Map& m, const std::string& key, std::vector<std::string>& out);
std::string join(const std::vector<std::string>& items);
std::string join(const std::vector<double>& items);

/// Entries of `m` whose key starts with `prefix`.
Map with_prefix(const Map& m, const std::string& prefix);

/// Parses `key = value` lines; '#' starts a comment, blank lines are
/// skipped. Throws FormatError with the line number otherwise.
Map parse(const std::string& text);
/// Reads a key=value file; IoError if unreadable.
Map load(const std::string& path);
/// One `key = value` line per entry, sorted by key.
std::string render(const Map& m);

}  // namespace milnli::kv
