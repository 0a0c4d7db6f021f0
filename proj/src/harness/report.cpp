#include "milnli/harness/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "milnli/numerics/errors.hpp"

namespace milnli {
namespace {

Json side_json(const IndexSet& idx, const std::map<std::size_t, double>& scores) {
  Json tokens = Json::array(), values = Json::array();
  for (std::size_t i : idx) {
    tokens.push_back(i);
    auto it = scores.find(i);
    values.push_back(it == scores.end() ? 0.0 : it->second);
  }
  return Json{{"indices", tokens}, {"scores", values}};
}

void read_side(const Json& j, IndexSet& idx, std::map<std::size_t, double>& scores) {
  const auto& tokens = j.at("indices");
  const auto& values = j.at("scores");
  if (tokens.size() != values.size()) throw FormatError("indices and scores differ in length");
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto i = tokens[k].get<std::size_t>();
    idx.insert(i);
    scores[i] = values[k].get<double>();
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string seconds(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, v < 0.1 ? "%.2e" : "%.3f", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string escape_html(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::string> row_cells(const ReportRow& r) {
  std::vector<std::string> cells{r.method};
  for (Side side : {Side::kPremise, Side::kHypothesis}) {
    if (r.scores) {
      const SideScores& s = r.scores->side(side);
      cells.push_back(fixed(s.precision, 2));
      cells.push_back(fixed(s.recall, 2));
      cells.push_back(fixed(s.f1, 2));
    } else {
      cells.insert(cells.end(), {"-", "-", "-"});
    }
  }
  cells.push_back(r.runtime && r.runtime->timed_calls ? seconds(r.runtime->mean_seconds) : "-");
  return cells;
}

const std::vector<std::string> kHeader = {"method", "P prem", "R prem", "F1 prem",
                                          "P hyp",  "R hyp",  "F1 hyp", "sec/inst"};

}  // namespace

Json explanation_to_json(const ExplanationRecord& r) {
  return Json{{"instance", r.instance},
              {"method", r.explanation.method},
              {"premise", side_json(r.explanation.premise, r.explanation.premise_scores)},
              {"hypothesis", side_json(r.explanation.hypothesis, r.explanation.hypothesis_scores)},
              {"seconds", r.explanation.seconds}};
}

ExplanationRecord explanation_from_json(const Json& j) {
  try {
    ExplanationRecord r;
    r.instance = j.at("instance").get<std::size_t>();
    r.explanation.method = j.at("method").get<std::string>();
    read_side(j.at("premise"), r.explanation.premise, r.explanation.premise_scores);
    read_side(j.at("hypothesis"), r.explanation.hypothesis, r.explanation.hypothesis_scores);
    r.explanation.seconds = j.value("seconds", 0.0);
    return r;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("explanation record: ") + e.what());
  }
}

void save_explanations(const std::filesystem::path& path,
                       std::span<const ExplanationRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << explanation_to_json(r).dump() << '\n';
}

std::vector<ExplanationRecord> load_explanations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<ExplanationRecord> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    try {
      out.push_back(explanation_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

Json scores_to_json(const std::string& method, const TokenScoreReport& r) {
  auto side = [](const SideScores& s) {
    return Json{{"precision", s.precision},
                {"recall", s.recall},
                {"f1", s.f1},
                {"true_positives", s.true_positives},
                {"false_positives", s.false_positives},
                {"false_negatives", s.false_negatives},
                {"empty_gold", s.empty_gold},
                {"select_all_precision", s.select_all_precision}};
  };
  return Json{{"record", "scores"},
              {"method", method},
              {"averaging", std::string(averaging_name(r.averaging))},
              {"instances", r.instances},
              {"premise", side(r.premise)},
              {"hypothesis", side(r.hypothesis)}};
}

Json runtime_to_json(const RuntimeReport& r) {
  return Json{{"record", "runtime"},
              {"method", r.method},
              {"mean_seconds", r.mean_seconds},
              {"median_seconds", r.median_seconds},
              {"threads", r.threads},
              {"timed_calls", r.timed_calls},
              {"failures", r.failures},
              {"errors", r.errors}};
}

std::string render_table(std::span<const ReportRow> rows, bool ansi) {
  std::vector<std::vector<std::string>> cells{kHeader};
  for (const auto& r : rows) cells.push_back(row_cells(r));
  std::vector<std::size_t> width(kHeader.size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::ostringstream out;
  for (std::size_t l = 0; l < cells.size(); ++l) {
    if (l == 0 && ansi) out << "\033[1m";
    for (std::size_t c = 0; c < cells[l].size(); ++c) {
      const std::string& s = cells[l][c];
      out << (c ? "  " : "")
          << (c == 0 ? s + std::string(width[0] - s.size(), ' ') : pad(s, width[c]));
    }
    if (l == 0 && ansi) out << "\033[0m";
    out << '\n';
  }
  return out.str();
}

std::string render_ansi_instance(const SentencePairInstance& inst, const Explanation& e) {
  std::ostringstream out;
  for (Side side : {Side::kPremise, Side::kHypothesis}) {
    out << (side == Side::kPremise ? "P: " : "H: ");
    const Tokens& tokens = inst.tokens(side);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const bool sel = e.indices(side).contains(i);
      const bool gold = inst.highlights(side).contains(i);
      if (i) out << ' ';
      if (sel) out << "\033[7m";
      if (gold) out << "\033[4m";
      out << tokens[i];
      if (sel || gold) out << "\033[0m";
    }
    out << '\n';
  }
  return out.str();
}

std::string render_html(const std::string& title, std::span<const ReportRow> rows,
                        const kv::Map& config, std::span<const SentencePairInstance> instances,
                        std::span<const HighlightSet> highlights, std::size_t max_instances) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" << escape_html(title)
      << "</title>\n<style>\n"
      << "body{font-family:sans-serif;margin:2em;max-width:70em}\n"
      << "table{border-collapse:collapse}td,th{padding:.2em .6em;border-bottom:1px solid #ccc;"
         "text-align:right}td:first-child,th:first-child{text-align:left}\n"
      << ".sel{background:#f7d774}.gold{text-decoration:underline}\n"
      << ".pair{margin:1em 0}.m{color:#666;font-size:.85em;width:6em;display:inline-block}\n"
      << "pre{background:#f4f4f4;padding:.5em}\n</style></head><body>\n";
  out << "<h1>" << escape_html(title) << "</h1>\n<table><tr>";
  for (const auto& h : kHeader) out << "<th>" << escape_html(h) << "</th>";
  out << "</tr>\n";
  for (const auto& r : rows) {
    out << "<tr>";
    for (const auto& c : row_cells(r)) out << "<td>" << escape_html(c) << "</td>";
    out << "</tr>\n";
  }
  out << "</table>\n<h2>Examples</h2>\n<p>Highlighted: selected by the method. Underlined: "
         "human highlights.</p>\n";
  const std::size_t shown = std::min(max_instances, instances.size());
  for (std::size_t k = 0; k < shown; ++k) {
    const auto& inst = instances[k];
    out << "<div class=\"pair\"><b>#" << k << "</b> gold: " << label_name(inst.label) << "<br>\n";
    for (const auto& hs : highlights) {
      if (k >= hs.explanations.size()) continue;
      const auto& e = hs.explanations[k];
      for (Side side : {Side::kPremise, Side::kHypothesis}) {
        out << "<span class=\"m\">" << escape_html(hs.method)
            << (side == Side::kPremise ? " P" : " H") << "</span>";
        const Tokens& tokens = inst.tokens(side);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
          std::string cls;
          if (e && e->indices(side).contains(i)) cls += "sel ";
          if (inst.highlights(side).contains(i)) cls += "gold";
          out << (cls.empty() ? "<span>" : "<span class=\"" + cls + "\">")
              << escape_html(tokens[i]) << "</span> ";
        }
        if (!e) out << "<i>(failed)</i>";
        out << "<br>\n";
      }
    }
    out << "</div>\n";
  }
  out << "<h2>Configuration</h2>\n<pre>" << escape_html(kv::render(config)) << "</pre>\n";
  out << "</body></html>\n";
  return out.str();
}

}  // namespace milnli
