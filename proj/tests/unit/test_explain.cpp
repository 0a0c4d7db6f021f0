#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "milnli/explain/anchors.hpp"
#include "milnli/explain/attention_threshold.hpp"
#include "milnli/explain/lime.hpp"
#include "milnli/numerics/errors.hpp"

using namespace milnli;

namespace {

constexpr TokenId kTrigger = 7;
constexpr TokenId kSecondTrigger = 8;
constexpr ClassDistribution kFires{0.9, 0.05, 0.05};
constexpr ClassDistribution kQuiet{0.05, 0.05, 0.9};

bool contains(std::span<const TokenId> s, TokenId t) {
  return std::find(s.begin(), s.end(), t) != s.end();
}

// Filler ids avoid pad, unk and both triggers.
TokenIds filler(std::mt19937_64& rng, std::size_t len) {
  std::uniform_int_distribution<TokenId> id(10, 60);
  TokenIds out(len);
  for (auto& t : out) t = id(rng);
  return out;
}

std::size_t plant(std::mt19937_64& rng, TokenIds& ids, TokenId token) {
  const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng);
  ids[pos] = token;
  return pos;
}

EncodedInstance random_pair(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  EncodedInstance inst;
  inst.premise = filler(rng, len(rng));
  inst.hypothesis = filler(rng, len(rng));
  return inst;
}

PairClassifierHandle hypothesis_trigger() {
  return [](std::span<const TokenId>, std::span<const TokenId> h) {
    return contains(h, kTrigger) ? kFires : kQuiet;
  };
}

PairClassifierHandle two_sided_trigger() {
  return [](std::span<const TokenId> p, std::span<const TokenId> h) {
    return contains(p, kTrigger) && contains(h, kSecondTrigger) ? kFires : kQuiet;
  };
}

PairClassifierHandle constant_handle() {
  return [](std::span<const TokenId>, std::span<const TokenId>) { return kQuiet; };
}

std::uint64_t hash_ids(std::span<const TokenId> ids, std::uint64_t salt) {
  std::uint64_t h = 1469598103934665603ULL ^ salt;
  for (TokenId t : ids) {
    h ^= static_cast<std::uint64_t>(t) + 0x9e3779b97f4a7c15ULL;
    h *= 1099511628211ULL;
    h ^= h >> 29;
  }
  return h;
}

// Deterministic but arbitrary labels.
PairClassifierHandle hashed_handle(std::uint64_t salt) {
  return [salt](std::span<const TokenId> p, std::span<const TokenId> h) {
    ClassDistribution probs{0.1, 0.1, 0.1};
    probs[(hash_ids(p, salt) ^ hash_ids(h, salt + 1)) % 3] = 0.8;
    return probs;
  };
}

Prediction prediction_with(const std::vector<double>& premise_raw,
                           const std::vector<double>& hypothesis_raw, Label label) {
  const std::size_t m = premise_raw.size(), n = hypothesis_raw.size();
  Prediction p;
  p.attention.scores = Tensor({m, n});
  for (std::size_t i = 0; i < m; ++i) p.attention.scores.at(i, n - 1) = premise_raw[i];
  for (std::size_t j = 0; j < n; ++j) p.attention.scores.at(m - 1, j) = hypothesis_raw[j];
  p.attention.premise.assign(m, 1.0 / static_cast<double>(m));
  p.attention.hypothesis.assign(n, 1.0 / static_cast<double>(n));
  p.probs = {0.1, 0.1, 0.1};
  p.probs[label_index(label)] = 0.8;
  return p;
}

std::size_t argmax_abs(const std::vector<double>& w) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (std::abs(w[i]) > std::abs(w[best])) best = i;
  }
  return best;
}

// Exact probability that the rule keeps the prediction, by enumerating every
// substitution pattern of the free positions.
double true_precision(const PairClassifierHandle& handle, const EncodedInstance& inst, Side side,
                      const AnchorRule& rule, const AnchorOptions& opts) {
  const Label target = argmax_label(handle(inst.premise, inst.hypothesis));
  const TokenIds& ids = inst.ids(side);
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!rule.tokens.contains(i)) free.push_back(i);
  }
  const double p = opts.substitution_probability;
  double total = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << free.size()); ++mask) {
    TokenIds perturbed = ids;
    double weight = 1.0;
    for (std::size_t k = 0; k < free.size(); ++k) {
      const bool sub = (mask >> k) & 1U;
      weight *= sub ? p : 1.0 - p;
      if (sub) perturbed[free[k]] = opts.placeholder;
    }
    const ClassDistribution probs = side == Side::kPremise ? handle(perturbed, inst.hypothesis)
                                                           : handle(inst.premise, perturbed);
    if (argmax_label(probs) == target) total += weight;
  }
  return total;
}

}  // namespace

TEST_CASE("threshold selects by tanh of raw scores") {
  // The last cell is shared: premise index 2 and hypothesis index 2 are both 0.2.
  const Prediction p = prediction_with({0.3, 0.1, 0.2}, {0.2, 1.5, 0.2}, Label::kEntails);
  const Explanation e = threshold_attention(p, {0.5, false});
  CHECK(e.hypothesis == IndexSet{1});
  CHECK(e.hypothesis_scores.at(1) == doctest::Approx(std::tanh(1.5)));
  CHECK(e.method == "attention");

  const Explanation all = threshold_attention(p, {0.0, false});
  CHECK(all.hypothesis == IndexSet{0, 1, 2});
  CHECK(all.premise == IndexSet{0, 1, 2});
}

TEST_CASE("threshold leaves the premise empty for neutral predictions") {
  const Prediction p = prediction_with({5.0, 5.0}, {5.0, 5.0}, Label::kNeutral);
  const Explanation e = threshold_attention(p, {0.1, false});
  CHECK(e.premise.empty());
  CHECK(e.hypothesis == IndexSet{0, 1});
}

TEST_CASE("threshold on normalized weights and tau bounds") {
  const Prediction p = prediction_with({3.0, 0.0}, {3.0, 0.0}, Label::kEntails);
  // Uniform normalized weights 0.5: tanh(0.5) = 0.462.
  CHECK(threshold_attention(p, {0.4, true}).hypothesis == IndexSet{0, 1});
  CHECK(threshold_attention(p, {0.5, true}).hypothesis.empty());
  CHECK_THROWS_AS(threshold_attention(p, {1.0, false}), ContractError);
  CHECK_THROWS_AS(threshold_attention(p, {-0.1, false}), ContractError);
}

TEST_CASE("threshold selection shrinks as tau grows") {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> score(1.5);
  std::uniform_real_distribution<double> tau(0.0, 0.999);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pr(1 + trial % 7), hr(1 + trial % 5);
    for (double& v : pr) v = score(rng);
    for (double& v : hr) v = score(rng);
    const Prediction p = prediction_with(pr, hr, kAllLabels[trial % 3]);
    double t1 = tau(rng), t2 = tau(rng);
    if (t1 > t2) std::swap(t1, t2);
    const Explanation lo = threshold_attention(p, {t1, false});
    const Explanation hi = threshold_attention(p, {t2, false});
    for (Side side : {Side::kPremise, Side::kHypothesis}) {
      CHECK(std::includes(lo.indices(side).begin(), lo.indices(side).end(),
                          hi.indices(side).begin(), hi.indices(side).end()));
    }
  }
}

TEST_CASE("weighted ridge matches the one-feature closed form") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::vector<std::vector<double>> x;
  std::vector<double> y, w;
  for (int s = 0; s < 40; ++s) {
    x.push_back({g(rng)});
    y.push_back(2.0 * x.back()[0] - 1.0 + 0.1 * g(rng));
    w.push_back(u(rng));
  }
  for (double lambda : {0.0, 0.5, 3.0}) {
    double ws = 0, xm = 0, ym = 0;
    for (int s = 0; s < 40; ++s) ws += w[s], xm += w[s] * x[s][0], ym += w[s] * y[s];
    xm /= ws;
    ym /= ws;
    double sxy = 0, sxx = 0;
    for (int s = 0; s < 40; ++s) {
      sxy += w[s] * (x[s][0] - xm) * (y[s] - ym);
      sxx += w[s] * (x[s][0] - xm) * (x[s][0] - xm);
    }
    const double beta = sxy / (sxx + lambda);
    const RidgeFit fit = weighted_ridge(x, y, w, lambda);
    CHECK(fit.coefficients[0] == doctest::Approx(beta).epsilon(1e-10));
    CHECK(fit.intercept == doctest::Approx(ym - beta * xm).epsilon(1e-10));
  }
  CHECK_THROWS_AS(weighted_ridge(x, y, std::vector<double>(3, 1.0), 1.0), ContractError);
}

TEST_CASE("lime kernel") {
  CHECK(lime_kernel(5, 5, 0.25) == 1.0);
  CHECK(lime_kernel(1, 4, 0.25) == doctest::Approx(std::exp(-0.25 / 0.0625)));
  CHECK(lime_kernel(2, 4, 0.25) < lime_kernel(3, 4, 0.25));
}

TEST_CASE("lime puts the planted trigger first") {
  std::mt19937_64 rng(11);
  const auto handle = hypothesis_trigger();
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    EncodedInstance inst = random_pair(rng, 3, 12);
    const std::size_t pos = plant(rng, inst.hypothesis, kTrigger);
    LimeOptions opts;
    opts.seed = static_cast<std::uint64_t>(trial) + 1;
    const LimeWeights w =
        lime_explain_side(handle, inst, Side::kHypothesis, Label::kEntails, opts);
    hits += argmax_abs(w.weights) == pos && w.weights[pos] > 0.0;
  }
  CHECK(hits >= 95);
}

TEST_CASE("lime on a constant classifier gives zero weights") {
  std::mt19937_64 rng(12);
  const EncodedInstance inst = random_pair(rng, 5, 9);
  const LimeWeights w =
      lime_explain_side(constant_handle(), inst, Side::kPremise, Label::kNeutral, {});
  for (double v : w.weights) CHECK(std::abs(v) < 1e-12);
  CHECK(w.intercept == doctest::Approx(0.9));
  CHECK(lime_explain_pair(constant_handle(), inst, {}).hypothesis.empty());
}

TEST_CASE("lime recovers an exactly linear target without ridge") {
  std::mt19937_64 rng(13);
  EncodedInstance inst = random_pair(rng, 6, 6);
  inst.hypothesis = {20, 21, 22, 23, 24, 25};
  const auto handle = [](std::span<const TokenId>, std::span<const TokenId> h) {
    return contains(h, 23) ? ClassDistribution{1.0, 0.0, 0.0} : ClassDistribution{0.0, 0.0, 1.0};
  };
  LimeOptions opts;
  opts.ridge = 0.0;
  const LimeWeights w = lime_explain_side(handle, inst, Side::kHypothesis, Label::kEntails, opts);
  for (std::size_t i = 0; i < w.weights.size(); ++i) {
    CHECK(w.weights[i] == doctest::Approx(i == 3 ? 1.0 : 0.0).epsilon(1e-9).scale(1.0));
  }
  CHECK(std::abs(w.intercept) < 1e-9);
}

TEST_CASE("lime on a one-token side") {
  EncodedInstance inst;
  inst.premise = {30};
  inst.hypothesis = {31, kTrigger};
  const LimeWeights w =
      lime_explain_side(hypothesis_trigger(), inst, Side::kPremise, Label::kEntails, {});
  CHECK(w.weights == std::vector<double>{0.0});
  CHECK(w.queries == 0);
}

TEST_CASE("lime pair selection") {
  std::mt19937_64 rng(14);
  int both = 0;
  for (int trial = 0; trial < 20; ++trial) {
    EncodedInstance inst = random_pair(rng, 4, 10);
    const std::size_t p = plant(rng, inst.premise, kTrigger);
    const std::size_t h = plant(rng, inst.hypothesis, kSecondTrigger);
    LimeOptions opts;
    opts.seed = static_cast<std::uint64_t>(trial) + 1;
    const Explanation e = lime_explain_pair(two_sided_trigger(), inst, opts);
    both += e.premise.contains(p) && e.hypothesis.contains(h);
    opts.top_k = 1;
    const Explanation one = lime_explain_pair(two_sided_trigger(), inst, opts);
    CHECK(one.premise.size() <= 1);
    CHECK(one.hypothesis.size() <= 1);
    CHECK(e.method == "lime");
    CHECK(e.seconds >= 0.0);
  }
  CHECK(both == 20);
}

TEST_CASE("lime is deterministic across seeds and worker counts") {
  std::mt19937_64 rng(15);
  const EncodedInstance inst = random_pair(rng, 8, 8);
  LimeOptions opts;
  opts.seed = 42;
  const auto handle = hashed_handle(3);
  const Explanation a = lime_explain_pair(handle, inst, opts);
  opts.workers = 4;
  const Explanation b = lime_explain_pair(handle, inst, opts);
  CHECK(a.premise == b.premise);
  CHECK(a.hypothesis == b.hypothesis);
  CHECK(a.premise_scores == b.premise_scores);
  CHECK(a.hypothesis_scores == b.hypothesis_scores);
}

TEST_CASE("lime reports the failing sample") {
  std::mt19937_64 rng(16);
  const EncodedInstance inst = random_pair(rng, 5, 5);
  const auto full_size = inst.premise.size();
  const auto flaky = [full_size](std::span<const TokenId> p, std::span<const TokenId>) {
    if (p.size() < full_size) throw std::runtime_error("backend down");
    return kQuiet;
  };
  CHECK_THROWS_AS(lime_explain_pair(flaky, inst, {}), QueryError);
  try {
    lime_explain_pair(flaky, inst, {});
  } catch (const QueryError& e) {
    CHECK(std::string(e.what()).find("sample") != std::string::npos);
  }
}

TEST_CASE("options round trip through key-value maps") {
  LimeOptions lo;
  lo.samples = 321;
  lo.kernel_width = 0.3;
  lo.selection = LimeSelection::kAbsoluteTopK;
  const LimeOptions lr = LimeOptions::from_map(lo.to_map());
  CHECK(lr.samples == 321);
  CHECK(lr.kernel_width == 0.3);
  CHECK(lr.selection == LimeSelection::kAbsoluteTopK);
  CHECK_THROWS_AS(LimeOptions::from_map({{"lime.selection", "best"}}), ConfigError);

  AnchorOptions ao;
  ao.delta = 0.05;
  ao.max_samples = 777;
  const AnchorOptions ar = AnchorOptions::from_map(ao.to_map());
  CHECK(ar.delta == 0.05);
  CHECK(ar.max_samples == 777);
  CHECK_THROWS_AS(AnchorOptions::from_map({{"anchors.delta", "1.5"}}), ConfigError);
}

TEST_CASE("hoeffding radius") {
  CHECK(hoeffding_radius(461, 0.1) <= 0.05);
  CHECK(hoeffding_radius(460, 0.1) > 0.05);
  CHECK(hoeffding_radius(100, 0.1) > hoeffding_radius(400, 0.1));
}

TEST_CASE("anchors find the planted trigger") {
  std::mt19937_64 rng(21);
  const auto handle = hypothesis_trigger();
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    EncodedInstance inst = random_pair(rng, 3, 12);
    const std::size_t pos = plant(rng, inst.hypothesis, kTrigger);
    AnchorOptions opts;
    opts.seed = static_cast<std::uint64_t>(trial) + 1;
    const AnchorRule rule = anchors_explain_side(handle, inst, Side::kHypothesis, opts);
    hits += rule.tokens.contains(pos) && rule.precision >= 0.95;
    CHECK(rule.samples <= opts.max_samples);
  }
  CHECK(hits >= 95);
}

TEST_CASE("anchors on a constant classifier are empty") {
  std::mt19937_64 rng(22);
  const EncodedInstance inst = random_pair(rng, 4, 8);
  const AnchorRule rule = anchors_explain_side(constant_handle(), inst, Side::kPremise, {});
  CHECK(rule.tokens.empty());
  CHECK(rule.precision == 1.0);
  CHECK(rule.converged);
  CHECK(rule.coverage == 1.0);
  CHECK(rule.lower_bound >= 0.95);
}

TEST_CASE("anchors cover a conjunction") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    EncodedInstance inst = random_pair(rng, 4, 9);
    const std::size_t a = plant(rng, inst.hypothesis, kTrigger);
    std::size_t b = a;
    while (b == a) b = plant(rng, inst.hypothesis, kSecondTrigger);
    inst.hypothesis[a] = kTrigger;
    const auto handle = [](std::span<const TokenId>, std::span<const TokenId> h) {
      return contains(h, kTrigger) && contains(h, kSecondTrigger) ? kFires : kQuiet;
    };
    AnchorOptions opts;
    opts.seed = static_cast<std::uint64_t>(trial) + 1;
    const AnchorRule rule = anchors_explain_side(handle, inst, Side::kHypothesis, opts);
    CHECK(rule.tokens.contains(a));
    CHECK(rule.tokens.contains(b));
    CHECK(rule.converged);
    CHECK(rule.coverage == doctest::Approx(0.25).epsilon(0.2));
  }
}

TEST_CASE("anchors for a premise-blind classifier") {
  std::mt19937_64 rng(24);
  EncodedInstance inst = random_pair(rng, 5, 8);
  const std::size_t h = plant(rng, inst.hypothesis, kTrigger);
  const Explanation e = anchors_explain_pair(hypothesis_trigger(), inst, {});
  CHECK(e.premise.empty());
  CHECK(e.hypothesis == IndexSet{h});
  CHECK(e.method == "anchors");

  EncodedInstance two = random_pair(rng, 5, 8);
  const std::size_t p2 = plant(rng, two.premise, kTrigger);
  const std::size_t h2 = plant(rng, two.hypothesis, kSecondTrigger);
  const Explanation both = anchors_explain_pair(two_sided_trigger(), two, {});
  CHECK(both.premise.contains(p2));
  CHECK(both.hypothesis.contains(h2));
}

TEST_CASE("anchors are deterministic across worker counts") {
  std::mt19937_64 rng(25);
  const EncodedInstance inst = random_pair(rng, 7, 7);
  AnchorOptions opts;
  opts.seed = 9;
  const auto handle = hashed_handle(17);
  const AnchorRule a = anchors_explain_side(handle, inst, Side::kPremise, opts);
  opts.workers = 3;
  const AnchorRule b = anchors_explain_side(handle, inst, Side::kPremise, opts);
  CHECK(a.tokens == b.tokens);
  CHECK(a.precision == b.precision);
  CHECK(a.samples == b.samples);
}

TEST_CASE("anchor lower bounds are calibrated") {
  // A trigger classifier that also drops its prediction on about 4% of the
  // perturbed inputs, so precisions sit close to the target.
  std::mt19937_64 rng(26);
  const auto handle = [](std::span<const TokenId>, std::span<const TokenId> h) {
    if (!contains(h, kTrigger)) return kQuiet;
    return hash_ids(h, 99) % 25 == 0 ? kQuiet : kFires;
  };
  int trials = 0, violations = 0;
  while (trials < 100) {
    EncodedInstance inst = random_pair(rng, 5, 8);
    plant(rng, inst.hypothesis, kTrigger);
    if (argmax_label(handle(inst.premise, inst.hypothesis)) != Label::kEntails) continue;
    AnchorOptions opts;
    opts.seed = static_cast<std::uint64_t>(trials) + 1;
    const AnchorRule rule = anchors_explain_side(handle, inst, Side::kHypothesis, opts);
    violations += true_precision(handle, inst, Side::kHypothesis, rule, opts) < rule.lower_bound;
    ++trials;
  }
  CHECK(violations <= 10);
}

TEST_CASE("anchors budget exhaustion is flagged") {
  std::mt19937_64 rng(27);
  const EncodedInstance inst = random_pair(rng, 8, 8);
  AnchorOptions opts;
  opts.max_samples = 60;
  const AnchorRule rule = anchors_explain_side(hashed_handle(5), inst, Side::kHypothesis, opts);
  CHECK_FALSE(rule.converged);
  CHECK(rule.samples <= 60);
}

TEST_CASE("explainers emit in-bounds indices") {
  std::mt19937_64 rng(28);
  LimeOptions lo;
  lo.samples = 200;
  AnchorOptions ao;
  ao.max_samples = 1500;
  for (int trial = 0; trial < 40; ++trial) {
    const EncodedInstance inst = random_pair(rng, 1, 10);
    const auto handle = hashed_handle(static_cast<std::uint64_t>(trial));
    lo.seed = ao.seed = static_cast<std::uint64_t>(trial) + 1;
    const std::size_t m = inst.premise.size(), n = inst.hypothesis.size();
    CHECK_NOTHROW(lime_explain_pair(handle, inst, lo).validate(m, n));
    CHECK_NOTHROW(anchors_explain_pair(handle, inst, ao).validate(m, n));

    std::vector<double> pr(m), hr(n);
    for (double& v : pr) v = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    for (double& v : hr) v = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    const Prediction p = prediction_with(pr, hr, kAllLabels[trial % 3]);
    CHECK_NOTHROW(threshold_attention(p, {0.3, trial % 2 == 0}).validate(m, n));
  }
}

TEST_CASE("explainers run against a trained-model handle") {
  std::mt19937_64 rng(29);
  Tensor table({64, 6});
  std::normal_distribution<double> g(0.0, 0.5);
  for (double& v : table.values()) v = g(rng);
  ModelConfig cfg;
  cfg.hidden = 5;
  cfg.attend_dim = 5;
  cfg.classifier_dims = {5};
  const EntailModel model(cfg, std::make_shared<const EmbeddingTable>(std::move(table)));
  const auto handle = classifier_handle(model);
  const EncodedInstance inst = random_pair(rng, 4, 7);
  LimeOptions lo;
  lo.samples = 100;
  AnchorOptions ao;
  ao.max_samples = 500;
  CHECK_NOTHROW(lime_explain_pair(handle, inst, lo).validate(inst.premise.size(), inst.hypothesis.size()));
  CHECK_NOTHROW(anchors_explain_pair(handle, inst, ao).validate(inst.premise.size(), inst.hypothesis.size()));
}
