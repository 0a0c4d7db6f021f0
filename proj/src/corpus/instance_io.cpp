#include "milnli/corpus/instance_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "milnli/numerics/errors.hpp"

namespace milnli {

using nlohmann::json;

std::string instance_to_json_line(const SentencePairInstance& instance) {
  json j;
  j["label"] = std::string(label_name(instance.label));
  j["premise"] = instance.premise;
  j["hypothesis"] = instance.hypothesis;
  j["premise_highlights"] = instance.premise_highlights;
  j["hypothesis_highlights"] = instance.hypothesis_highlights;
  return j.dump();
}

SentencePairInstance instance_from_json_line(const std::string& line) {
  SentencePairInstance inst;
  try {
    const json j = json::parse(line);
    inst.label = parse_label(j.at("label").get<std::string>());
    inst.premise = j.at("premise").get<Tokens>();
    inst.hypothesis = j.at("hypothesis").get<Tokens>();
    inst.premise_highlights = j.value("premise_highlights", IndexSet{});
    inst.hypothesis_highlights = j.value("hypothesis_highlights", IndexSet{});
  } catch (const json::exception& e) {
    throw FormatError(std::string("instance record: ") + e.what());
  }
  inst.validate();
  return inst;
}

void write_instances(std::ostream& out, std::span<const SentencePairInstance> instances) {
  for (const auto& inst : instances) out << instance_to_json_line(inst) << '\n';
}

std::vector<SentencePairInstance> read_instances(std::istream& in) {
  std::vector<SentencePairInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(instance_from_json_line(line));
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_instances(const std::filesystem::path& path,
                    std::span<const SentencePairInstance> instances) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_instances(out, instances);
}

std::vector<SentencePairInstance> load_instances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_instances(in);
}

}  // namespace milnli
