#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "milnli/corpus/instance.hpp"

// Canonical corpus format: one JSON object per line,
//   {"label":"contradicts","premise":["children","smiling",...],
//    "hypothesis":[...],"premise_highlights":[1],"hypothesis_highlights":[3]}
namespace milnli {

std::string instance_to_json_line(const SentencePairInstance& instance);
/// Throws FormatError on malformed records or invalid highlight indices.
SentencePairInstance instance_from_json_line(const std::string& line);

void write_instances(std::ostream& out, std::span<const SentencePairInstance> instances);
std::vector<SentencePairInstance> read_instances(std::istream& in);

void save_instances(const std::filesystem::path& path,
                    std::span<const SentencePairInstance> instances);
std::vector<SentencePairInstance> load_instances(const std::filesystem::path& path);

}  // namespace milnli
