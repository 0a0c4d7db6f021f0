#include "milnli/explain/anchors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "milnli/numerics/errors.hpp"
#include "milnli/util/kv.hpp"
#include "milnli/util/parallel.hpp"

namespace milnli {
namespace {

void validate(const AnchorOptions& o) {
  if (!(o.substitution_probability > 0.0 && o.substitution_probability <= 1.0)) {
    throw ConfigError("anchors.substitution_probability must lie in (0, 1]");
  }
  if (!(o.precision_target > 0.0 && o.precision_target <= 1.0)) {
    throw ConfigError("anchors.precision_target must lie in (0, 1]");
  }
  if (!(o.delta > 0.0 && o.delta < 1.0)) throw ConfigError("anchors.delta must lie in (0, 1)");
  if (!(o.tolerance > 0.0)) throw ConfigError("anchors.tolerance must be positive");
  if (o.batch == 0) throw ConfigError("anchors.batch must be positive");
}

struct Arm {
  IndexSet anchor;
  std::size_t n = 0;
  std::size_t hits = 0;

  double mean() const { return n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0; }
  double lower(double delta) const {
    return n ? std::max(0.0, mean() - hoeffding_radius(n, delta)) : 0.0;
  }
  double upper(double delta) const {
    return n ? std::min(1.0, mean() + hoeffding_radius(n, delta)) : 1.0;
  }
};

class Sampler {
 public:
  Sampler(const PairClassifierHandle& handle, const EncodedInstance& instance, Side side,
          Label target, const AnchorOptions& options)
      : handle_(handle),
        instance_(instance),
        side_(side),
        target_(target),
        options_(options),
        rng_(options.seed) {}

  std::size_t remaining() const { return options_.max_samples - std::min(samples_, options_.max_samples); }
  std::size_t samples() const { return samples_; }
  std::size_t queries() const { return queries_; }

  // Draws up to `per_arm` samples for every arm, fewer if the budget is
  // short. Returns false when nothing could be drawn.
  bool pull(const std::vector<Arm*>& arms, std::size_t per_arm) {
    per_arm = std::min(per_arm, remaining() / arms.size());
    if (per_arm == 0) return false;
    const TokenIds& tokens = instance_.ids(side_);
    std::bernoulli_distribution substitute(options_.substitution_probability);

    std::vector<TokenIds> inputs;
    inputs.reserve(arms.size() * per_arm);
    for (const Arm* arm : arms) {
      for (std::size_t s = 0; s < per_arm; ++s) {
        TokenIds perturbed = tokens;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
          if (!arm->anchor.contains(i) && substitute(rng_)) perturbed[i] = options_.placeholder;
        }
        inputs.push_back(std::move(perturbed));
      }
    }

    std::vector<std::size_t> fresh;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (cache_.emplace(inputs[k], Label::kNeutral).second) fresh.push_back(k);
    }
    std::vector<Label> answers(fresh.size());
    parallel_for(fresh.size(), options_.workers, [&](std::size_t f) {
      const TokenIds& input = inputs[fresh[f]];
      ClassDistribution probs;
      try {
        probs = side_ == Side::kPremise ? handle_(input, instance_.hypothesis)
                                        : handle_(instance_.premise, input);
      } catch (const std::exception& e) {
        throw QueryError("anchors: classifier query failed on " + std::string(side_name(side_)) +
                         " sample " + std::to_string(samples_ + fresh[f]) + ": " + e.what());
      }
      answers[f] = argmax_label(probs);
    });
    for (std::size_t f = 0; f < fresh.size(); ++f) cache_[inputs[fresh[f]]] = answers[f];
    queries_ += fresh.size();

    for (std::size_t a = 0; a < arms.size(); ++a) {
      for (std::size_t s = 0; s < per_arm; ++s) {
        arms[a]->n += 1;
        arms[a]->hits += cache_.at(inputs[a * per_arm + s]) == target_;
      }
    }
    samples_ += inputs.size();
    return true;
  }

 private:
  const PairClassifierHandle& handle_;
  const EncodedInstance& instance_;
  Side side_;
  Label target_;
  const AnchorOptions& options_;
  std::mt19937_64 rng_;
  std::map<TokenIds, Label> cache_;
  std::size_t samples_ = 0;
  std::size_t queries_ = 0;
};

double coverage_of(const IndexSet& anchor, std::size_t length, const AnchorOptions& options) {
  if (anchor.empty() || options.coverage_samples == 0) return 1.0;
  std::mt19937_64 rng(options.seed ^ 0x2545f4914f6cdd1dULL);
  std::bernoulli_distribution substitute(options.substitution_probability);
  std::size_t covered = 0;
  for (std::size_t s = 0; s < options.coverage_samples; ++s) {
    bool all_kept = true;
    for (std::size_t i = 0; i < length; ++i) {
      const bool dropped = substitute(rng);
      if (anchor.contains(i) && dropped) all_kept = false;
    }
    covered += all_kept;
  }
  return static_cast<double>(covered) / static_cast<double>(options.coverage_samples);
}

}  // namespace

std::map<std::string, std::string> AnchorOptions::to_map() const {
  return {{"anchors.placeholder", std::to_string(placeholder)},
          {"anchors.substitution_probability", kv::format(substitution_probability)},
          {"anchors.precision_target", kv::format(precision_target)},
          {"anchors.delta", kv::format(delta)},
          {"anchors.tolerance", kv::format(tolerance)},
          {"anchors.batch", std::to_string(batch)},
          {"anchors.max_samples", std::to_string(max_samples)},
          {"anchors.coverage_samples", std::to_string(coverage_samples)},
          {"anchors.seed", std::to_string(seed)},
          {"anchors.workers", std::to_string(workers)}};
}

AnchorOptions AnchorOptions::from_map(const std::map<std::string, std::string>& m) {
  AnchorOptions o;
  std::size_t placeholder = static_cast<std::size_t>(o.placeholder);
  kv::read(m, "anchors.placeholder", placeholder);
  o.placeholder = static_cast<TokenId>(placeholder);
  kv::read(m, "anchors.substitution_probability", o.substitution_probability);
  kv::read(m, "anchors.precision_target", o.precision_target);
  kv::read(m, "anchors.delta", o.delta);
  kv::read(m, "anchors.tolerance", o.tolerance);
  kv::read(m, "anchors.batch", o.batch);
  kv::read(m, "anchors.max_samples", o.max_samples);
  kv::read(m, "anchors.coverage_samples", o.coverage_samples);
  kv::read(m, "anchors.seed", o.seed);
  kv::read(m, "anchors.workers", o.workers);
  validate(o);
  return o;
}

double hoeffding_radius(std::size_t n, double delta) {
  if (n == 0) return 1.0;
  return std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

AnchorRule anchors_explain_side(const PairClassifierHandle& handle, const EncodedInstance& instance,
                                Side side, const AnchorOptions& options) {
  validate(options);
  const std::size_t d = instance.ids(side).size();
  if (d == 0 || instance.premise.empty() || instance.hypothesis.empty()) {
    throw ContractError("anchors_explain_side: empty sentence");
  }
  Label target;
  try {
    target = argmax_label(handle(instance.premise, instance.hypothesis));
  } catch (const std::exception& e) {
    throw QueryError(std::string("anchors: classifier query failed on the original pair: ") +
                     e.what());
  }

  Sampler sampler(handle, instance, side, target, options);
  AnchorRule rule;
  rule.side = side;
  rule.delta = options.delta;
  rule.precision_target = options.precision_target;

  auto finish = [&](const Arm& arm, bool converged) {
    rule.tokens = arm.anchor;
    rule.precision = arm.n ? arm.mean() : 0.0;
    rule.lower_bound = arm.lower(options.delta);
    rule.converged = converged;
    rule.coverage = coverage_of(arm.anchor, d, options);
    rule.samples = sampler.samples();
    rule.queries = sampler.queries() + 1;
    return rule;
  };

  Arm current;
  while (true) {
    // Settle whether the current rule already meets the target.
    while (true) {
      if (current.n > 0) {
        if (current.lower(options.delta) >= options.precision_target) return finish(current, true);
        if (current.upper(options.delta) < options.precision_target) break;
        if (hoeffding_radius(current.n, options.delta) < options.tolerance / 2.0) break;
      }
      if (!sampler.pull({&current}, options.batch)) return finish(current, false);
    }
    if (current.anchor.size() == d) return finish(current, false);

    std::vector<Arm> arms;
    for (std::size_t i = 0; i < d; ++i) {
      if (current.anchor.contains(i)) continue;
      Arm arm{current.anchor};
      arm.anchor.insert(i);
      arms.push_back(std::move(arm));
    }
    const double arm_delta = options.delta / static_cast<double>(arms.size());
    std::vector<Arm*> active;
    for (auto& a : arms) active.push_back(&a);
    while (active.size() > 1) {
      if (!sampler.pull(active, options.batch)) break;
      double best_lower = 0.0;
      for (const Arm* a : active) best_lower = std::max(best_lower, a->lower(arm_delta));
      std::erase_if(active, [&](const Arm* a) { return a->upper(arm_delta) < best_lower; });
      if (best_lower >= options.precision_target) break;
      const bool narrow = std::all_of(active.begin(), active.end(), [&](const Arm* a) {
        return hoeffding_radius(a->n, arm_delta) < options.tolerance;
      });
      if (narrow) break;
    }
    const Arm* best = active.front();
    for (const Arm* a : active) {
      if (a->mean() > best->mean()) best = a;
    }
    if (best->n == 0 && arms.size() > 1) return finish(current, false);

    std::size_t added = 0;
    for (std::size_t i : best->anchor) {
      if (!current.anchor.contains(i)) added = i;
    }
    rule.step_precision[added] = best->mean();
    // Fresh samples for the chosen rule keep its bound free of selection bias.
    current = Arm{best->anchor};
  }
}

Explanation anchors_explain_pair(const PairClassifierHandle& handle,
                                 const EncodedInstance& instance, const AnchorOptions& options) {
  if (instance.premise.empty() || instance.hypothesis.empty()) {
    throw ContractError("anchors_explain_pair: empty sentence");
  }
  const auto start = std::chrono::steady_clock::now();
  Explanation ex;
  ex.method = "anchors";
  for (Side side : {Side::kPremise, Side::kHypothesis}) {
    const AnchorRule rule = anchors_explain_side(handle, instance, side, options);
    ex.indices(side) = rule.tokens;
    for (std::size_t i : rule.tokens) {
      auto it = rule.step_precision.find(i);
      ex.scores(side)[i] = it == rule.step_precision.end() ? rule.precision : it->second;
    }
  }
  ex.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return ex;
}

}  // namespace milnli
