#include "milnli/explain/lime.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "milnli/numerics/errors.hpp"
#include "milnli/util/kv.hpp"
#include "milnli/util/parallel.hpp"

namespace milnli {
namespace {

// Weights below this count as zero when selecting positive evidence.
constexpr double kWeightFloor = 1e-10;

void validate(const LimeOptions& o) {
  if (o.samples < 2) throw ConfigError("lime.samples must be at least 2");
  if (!(o.kernel_width > 0.0)) throw ConfigError("lime.kernel_width must be positive");
  if (!(o.ridge >= 0.0)) throw ConfigError("lime.ridge must be non-negative");
}

std::string selection_name(LimeSelection s) {
  return s == LimeSelection::kPositiveTopK ? "positive_top_k" : "absolute_top_k";
}

// Sample 0 keeps everything; every other mask drops between 1 and d-1 tokens,
// so no perturbed sentence is empty.
std::vector<std::vector<char>> sample_masks(std::size_t d, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<char>> masks(n, std::vector<char>(d, 1));
  std::vector<std::size_t> positions(d);
  std::uniform_int_distribution<std::size_t> drop_count(1, d - 1);
  for (std::size_t s = 1; s < n; ++s) {
    std::iota(positions.begin(), positions.end(), 0);
    std::shuffle(positions.begin(), positions.end(), rng);
    const std::size_t drop = drop_count(rng);
    for (std::size_t k = 0; k < drop; ++k) masks[s][positions[k]] = 0;
  }
  return masks;
}

}  // namespace

std::map<std::string, std::string> LimeOptions::to_map() const {
  return {{"lime.samples", std::to_string(samples)},
          {"lime.ridge", kv::format(ridge)},
          {"lime.kernel_width", kv::format(kernel_width)},
          {"lime.top_k", std::to_string(top_k)},
          {"lime.selection", selection_name(selection)},
          {"lime.seed", std::to_string(seed)},
          {"lime.workers", std::to_string(workers)}};
}

LimeOptions LimeOptions::from_map(const std::map<std::string, std::string>& m) {
  LimeOptions o;
  kv::read(m, "lime.samples", o.samples);
  kv::read(m, "lime.ridge", o.ridge);
  kv::read(m, "lime.kernel_width", o.kernel_width);
  kv::read(m, "lime.top_k", o.top_k);
  kv::read(m, "lime.seed", o.seed);
  kv::read(m, "lime.workers", o.workers);
  std::string sel = selection_name(o.selection);
  kv::read(m, "lime.selection", sel);
  if (sel == "positive_top_k") o.selection = LimeSelection::kPositiveTopK;
  else if (sel == "absolute_top_k") o.selection = LimeSelection::kAbsoluteTopK;
  else throw ConfigError("lime.selection: unknown policy '" + sel + "'");
  validate(o);
  return o;
}

RidgeFit weighted_ridge(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                        const std::vector<double>& sample_weights, double lambda) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n || sample_weights.size() != n) {
    throw ContractError("weighted_ridge: sample counts disagree");
  }
  const std::size_t d = x.front().size();
  Eigen::MatrixXd xm(n, d);
  Eigen::VectorXd yv(n), w(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (x[s].size() != d) throw ContractError("weighted_ridge: ragged design matrix");
    for (std::size_t j = 0; j < d; ++j) xm(s, j) = x[s][j];
    yv(s) = y[s];
    w(s) = sample_weights[s];
  }
  const double wsum = w.sum();
  if (!(wsum > 0.0)) throw DegenerateInputError("weighted_ridge: sample weights sum to zero");

  const Eigen::RowVectorXd x_mean = (w.transpose() * xm) / wsum;
  const double y_mean = w.dot(yv) / wsum;
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd xc = sw.asDiagonal() * (xm.rowwise() - x_mean);
  const Eigen::VectorXd yc = sw.asDiagonal() * (yv.array() - y_mean).matrix();

  Eigen::VectorXd beta;
  if (lambda > 0.0) {
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += lambda;
    beta = gram.ldlt().solve(xc.transpose() * yc);
  } else {
    beta = xc.colPivHouseholderQr().solve(yc);
  }

  RidgeFit fit;
  fit.coefficients.assign(beta.data(), beta.data() + d);
  fit.intercept = y_mean - x_mean.dot(beta);
  return fit;
}

double lime_kernel(std::size_t kept, std::size_t total, double width) {
  if (total == 0 || kept > total) throw ContractError("lime_kernel: bad mask size");
  const double distance = 1.0 - std::sqrt(static_cast<double>(kept) / static_cast<double>(total));
  return std::exp(-distance * distance / (width * width));
}

LimeWeights lime_explain_side(const PairClassifierHandle& handle, const EncodedInstance& instance,
                              Side side, Label target, const LimeOptions& options) {
  validate(options);
  const TokenIds& tokens = instance.ids(side);
  const std::size_t d = tokens.size();
  if (d == 0) throw ContractError("lime_explain_side: empty sentence");

  LimeWeights out;
  out.target = target;
  out.weights.assign(d, 0.0);
  if (d == 1) return out;

  const auto masks = sample_masks(d, options.samples, options.seed);
  std::vector<double> y(options.samples);
  parallel_for(options.samples, options.workers, [&](std::size_t s) {
    TokenIds kept;
    kept.reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
      if (masks[s][i]) kept.push_back(tokens[i]);
    }
    const bool on_premise = side == Side::kPremise;
    ClassDistribution probs;
    try {
      probs = on_premise ? handle(kept, instance.hypothesis) : handle(instance.premise, kept);
    } catch (const std::exception& e) {
      throw QueryError("lime: classifier query failed on " + std::string(side_name(side)) +
                       " sample " + std::to_string(s) + ": " + e.what());
    }
    y[s] = probs[label_index(target)];
  });
  out.queries = options.samples;

  std::vector<std::vector<double>> x(options.samples, std::vector<double>(d));
  std::vector<double> w(options.samples);
  for (std::size_t s = 0; s < options.samples; ++s) {
    std::size_t kept = 0;
    for (std::size_t i = 0; i < d; ++i) {
      x[s][i] = masks[s][i];
      kept += masks[s][i];
    }
    w[s] = lime_kernel(kept, d, options.kernel_width);
  }
  const RidgeFit fit = weighted_ridge(x, y, w, options.ridge);
  out.weights = fit.coefficients;
  out.intercept = fit.intercept;
  return out;
}

Explanation lime_explain_pair(const PairClassifierHandle& handle, const EncodedInstance& instance,
                              const LimeOptions& options) {
  if (instance.premise.empty() || instance.hypothesis.empty()) {
    throw ContractError("lime_explain_pair: empty sentence");
  }
  const auto start = std::chrono::steady_clock::now();
  ClassDistribution original;
  try {
    original = handle(instance.premise, instance.hypothesis);
  } catch (const std::exception& e) {
    throw QueryError(std::string("lime: classifier query failed on the original pair: ") +
                     e.what());
  }
  const Label target = argmax_label(original);

  Explanation ex;
  ex.method = "lime";
  for (Side side : {Side::kPremise, Side::kHypothesis}) {
    const LimeWeights lw = lime_explain_side(handle, instance, side, target, options);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < lw.weights.size(); ++i) {
      if (options.selection == LimeSelection::kAbsoluteTopK || lw.weights[i] > kWeightFloor) {
        order.push_back(i);
      }
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(lw.weights[a]) > std::abs(lw.weights[b]);
    });
    if (order.size() > options.top_k) order.resize(options.top_k);
    for (std::size_t i : order) {
      ex.indices(side).insert(i);
      ex.scores(side)[i] = lw.weights[i];
    }
  }
  ex.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return ex;
}

}  // namespace milnli
