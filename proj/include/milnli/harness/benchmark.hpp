#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "milnli/corpus/vocabulary.hpp"
#include "milnli/explain/explanation.hpp"

namespace milnli {

using ExplainFn = std::function<Explanation(const EncodedInstance& instance)>;

struct ExplainMethod {
  std::string name;
  ExplainFn explain;
};

struct RuntimeReport {
  std::string method;
  /// Per-instance wall-clock seconds over successful calls.
  double mean_seconds = 0.0;
  double median_seconds = 0.0;
  std::size_t threads = 1;
  std::size_t timed_calls = 0;
  std::size_t failures = 0;
  /// First failure message per failing instance.
  std::vector<std::string> errors;
};

struct BenchmarkResult {
  RuntimeReport runtime;
  /// Output of the last repetition per instance; empty where it failed.
  std::vector<std::optional<Explanation>> explanations;
};

/// Explains every instance `repetitions` times on the calling thread, timing
/// each call. Failing calls are recorded and left out of the timing.
/// ContractError on no instances or zero repetitions.
BenchmarkResult benchmark(const ExplainMethod& method, std::span<const EncodedInstance> instances,
                          std::size_t repetitions = 1);

}  // namespace milnli
