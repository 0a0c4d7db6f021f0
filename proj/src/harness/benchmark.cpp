#include "milnli/harness/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "milnli/numerics/errors.hpp"

namespace milnli {

BenchmarkResult benchmark(const ExplainMethod& method, std::span<const EncodedInstance> instances,
                          std::size_t repetitions) {
  if (instances.empty()) throw ContractError("benchmark needs at least one instance");
  if (repetitions == 0) throw ContractError("benchmark needs at least one repetition");
  BenchmarkResult result;
  result.runtime.method = method.name;
  result.explanations.resize(instances.size());
  std::vector<double> times;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto start = std::chrono::steady_clock::now();
      try {
        Explanation e = method.explain(instances[i]);
        times.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        e.seconds = times.back();
        result.explanations[i] = std::move(e);
      } catch (const std::exception& e) {
        ++result.runtime.failures;
        result.explanations[i].reset();
        if (rep == 0) {
          result.runtime.errors.push_back("instance " + std::to_string(i) + ": " + e.what());
        }
      }
    }
  }
  result.runtime.timed_calls = times.size();
  if (!times.empty()) {
    result.runtime.mean_seconds =
        std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
    std::sort(times.begin(), times.end());
    const std::size_t n = times.size();
    result.runtime.median_seconds =
        n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  }
  return result;
}

}  // namespace milnli
