#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "milnli/corpus/instance.hpp"
#include "milnli/explain/explanation.hpp"
#include "milnli/harness/benchmark.hpp"
#include "milnli/harness/metrics.hpp"
#include "milnli/util/kv.hpp"

namespace milnli {

using Json = nlohmann::ordered_json;

struct ExplanationRecord {
  std::size_t instance = 0;
  Explanation explanation;
};

Json explanation_to_json(const ExplanationRecord& record);
/// FormatError on missing or mistyped fields.
ExplanationRecord explanation_from_json(const Json& j);
void save_explanations(const std::filesystem::path& path, std::span<const ExplanationRecord> records);
std::vector<ExplanationRecord> load_explanations(const std::filesystem::path& path);

Json scores_to_json(const std::string& method, const TokenScoreReport& report);
Json runtime_to_json(const RuntimeReport& report);

/// One line of the summary table.
struct ReportRow {
  std::string method;
  std::optional<TokenScoreReport> scores;
  std::optional<RuntimeReport> runtime;
};

/// Fixed-width P/R/F1 table per side plus runtime; bold headers when `ansi`.
std::string render_table(std::span<const ReportRow> rows, bool ansi);

/// Per-method explanations of the same instances, for the highlight view.
struct HighlightSet {
  std::string method;
  std::vector<std::optional<Explanation>> explanations;
};

/// Standalone page: the summary table, the resolved config, and the first
/// `max_instances` pairs with each method's selected tokens marked and gold
/// highlights underlined.
std::string render_html(const std::string& title, std::span<const ReportRow> rows,
                        const kv::Map& config, std::span<const SentencePairInstance> instances,
                        std::span<const HighlightSet> highlights, std::size_t max_instances);

/// Terminal rendering of one instance: selected tokens in inverse video,
/// gold tokens underlined.
std::string render_ansi_instance(const SentencePairInstance& instance,
                                 const Explanation& explanation);

}  // namespace milnli
