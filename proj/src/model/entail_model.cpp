#include "milnli/model/entail_model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>

#include "milnli/numerics/errors.hpp"
#include "milnli/numerics/ops.hpp"
#include "milnli/util/log.hpp"

namespace milnli {
namespace {

std::atomic<std::size_t> g_uniform_fallbacks{0};

Tensor xavier(std::mt19937_64& rng, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t({fan_in, fan_out});
  for (double& v : t.values()) v = dist(rng);
  return t;
}

// L1-normalizes a non-negative score vector, substituting the uniform
// distribution when every score is zero.
Var normalize_or_uniform(Var scores) {
  double total = 0.0;
  for (double v : scores.value().values()) total += v;
  if (total > 0.0) return ops::l1_normalize(scores);
  const std::size_t n = scores.value().size();
  if (g_uniform_fallbacks.fetch_add(1) == 0) {
    log::warning("attention scores are all zero; using a uniform distribution");
  }
  return scores.tape->constant(Tensor({n}, 1.0 / static_cast<double>(n)));
}

std::string join(const std::vector<std::size_t>& dims) {
  std::ostringstream out;
  for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? "," : "") << dims[i];
  return out.str();
}

std::vector<std::size_t> split_dims(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (!part.empty()) out.push_back(std::stoul(part));
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> ModelConfig::to_map() const {
  auto exact = [](double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
  };
  return {
      {"model.hidden", std::to_string(hidden)},
      {"model.attend_dim", std::to_string(attend_dim)},
      {"model.classifier_dims", join(classifier_dims)},
      {"model.pooling", pooling == Pooling::kWeightedSum ? "weighted_sum" : "final_token"},
      {"model.seed", std::to_string(seed)},
      {"model.forget_bias", exact(forget_bias)},
      {"model.attend_bias", exact(attend_bias)},
      {"model.score_smoothing", exact(score_smoothing)},
  };
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  auto get = [&kv](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  try {
    if (auto v = get("model.hidden")) c.hidden = std::stoul(*v);
    if (auto v = get("model.attend_dim")) c.attend_dim = std::stoul(*v);
    if (auto v = get("model.classifier_dims")) c.classifier_dims = split_dims(*v);
    if (auto v = get("model.pooling")) {
      if (*v == "weighted_sum") c.pooling = Pooling::kWeightedSum;
      else if (*v == "final_token") c.pooling = Pooling::kFinalToken;
      else throw ConfigError("model.pooling must be weighted_sum or final_token");
    }
    if (auto v = get("model.seed")) c.seed = std::stoull(*v);
    if (auto v = get("model.forget_bias")) c.forget_bias = std::stod(*v);
    if (auto v = get("model.attend_bias")) c.attend_bias = std::stod(*v);
    if (auto v = get("model.score_smoothing")) c.score_smoothing = std::stod(*v);
  } catch (const std::logic_error& e) {
    throw ConfigError(std::string("bad model setting: ") + e.what());
  }
  return c;
}

std::vector<double> AttentionOutputs::raw(Side side) const {
  const std::size_t m = scores.rows(), n = scores.cols();
  std::vector<double> out;
  if (side == Side::kPremise) {
    for (std::size_t i = 0; i < m; ++i) out.push_back(scores.at(i, n - 1));
  } else {
    for (std::size_t j = 0; j < n; ++j) out.push_back(scores.at(m - 1, j));
  }
  return out;
}

Label Prediction::label() const {
  const auto it = std::max_element(probs.begin(), probs.end());
  return kAllLabels[static_cast<std::size_t>(it - probs.begin())];
}

ParameterSet init_entail_params(const ModelConfig& config, std::size_t embedding_dim) {
  if (config.hidden == 0 || config.attend_dim == 0) {
    throw ContractError("model dimensions must be positive");
  }
  std::mt19937_64 rng(config.seed);
  const std::size_t H = config.hidden;
  ParameterSet ps;
  ps.add("lstm.W", xavier(rng, embedding_dim, 4 * H));
  ps.add("lstm.U", xavier(rng, H, 4 * H));
  Tensor bias({4 * H}, 0.0);
  for (std::size_t k = H; k < 2 * H; ++k) bias[k] = config.forget_bias;
  ps.add("lstm.b", std::move(bias));
  ps.add("attend.W", xavier(rng, H, config.attend_dim));
  ps.add("attend.b", Tensor({config.attend_dim}, config.attend_bias));
  std::size_t in = 2 * H;
  for (std::size_t layer = 0; layer < config.classifier_dims.size(); ++layer) {
    const std::size_t out = config.classifier_dims[layer];
    ps.add("cls.W" + std::to_string(layer), xavier(rng, in, out));
    ps.add("cls.b" + std::to_string(layer), Tensor({out}, 0.0));
    in = out;
  }
  const std::string last = std::to_string(config.classifier_dims.size());
  ps.add("cls.W" + last, xavier(rng, in, kNumLabels));
  ps.add("cls.b" + last, Tensor({kNumLabels}, 0.0));
  return ps;
}

EntailModel::EntailModel(ModelConfig config, std::shared_ptr<const EmbeddingTable> embeddings)
    : config_(std::move(config)), embeddings_(std::move(embeddings)) {
  if (!embeddings_) throw ContractError("EntailModel needs an embedding table");
  params_ = init_entail_params(config_, embeddings_->dim());
}

EntailModel::EntailModel(ModelConfig config, std::shared_ptr<const EmbeddingTable> embeddings,
                         ParameterSet params)
    : config_(std::move(config)), embeddings_(std::move(embeddings)), params_(std::move(params)) {
  if (!embeddings_) throw ContractError("EntailModel needs an embedding table");
  const ParameterSet fresh = init_entail_params(config_, embeddings_->dim());
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    const auto idx = params_.find(fresh.name(i));
    if (!idx || params_.value(*idx).shape() != fresh.value(i).shape()) {
      throw ContractError("parameter '" + fresh.name(i) + "' missing or mis-shaped");
    }
  }
}

Var EntailModel::encode_sentence(ParamBinder& bind, std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw ContractError("cannot encode an empty sentence");
  Tape& tape = bind.tape();
  const std::size_t H = config_.hidden;

  Var inputs = tape.constant(embeddings_->lookup(tokens));
  Var projected = ops::add_row(ops::matmul(inputs, bind("lstm.W")), bind("lstm.b"));
  Var recurrent = bind("lstm.U");

  std::vector<Var> states;
  states.reserve(tokens.size());
  Var h{}, c{};
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    Var gates = ops::row(projected, t);
    if (t > 0) gates = ops::add(gates, ops::matmul(h, recurrent));
    Var in_gate = ops::sigmoid(ops::slice_cols(gates, 0, H));
    Var forget_gate = ops::sigmoid(ops::slice_cols(gates, H, 2 * H));
    Var candidate = ops::tanh(ops::slice_cols(gates, 2 * H, 3 * H));
    Var out_gate = ops::sigmoid(ops::slice_cols(gates, 3 * H, 4 * H));
    Var fresh = ops::mul(in_gate, candidate);
    c = t > 0 ? ops::add(ops::mul(forget_gate, c), fresh) : fresh;
    h = ops::mul(out_gate, ops::tanh(c));
    states.push_back(h);
  }
  return ops::stack_rows(states);
}

AttentionVars EntailModel::attend(ParamBinder& bind, Var premise_states,
                                  Var hypothesis_states) const {
  Var W = bind("attend.W");
  Var b = bind("attend.b");
  Var u = ops::relu(ops::add_row(ops::matmul(premise_states, W), b));
  Var v = ops::relu(ops::add_row(ops::matmul(hypothesis_states, W), b));
  Var scores = ops::matmul(u, ops::transpose(v));
  const std::size_t m = scores.value().rows(), n = scores.value().cols();
  Var premise_scores = ops::reshape(ops::column(scores, n - 1), {m});
  Var hypothesis_scores = ops::reshape(ops::row(scores, m - 1), {n});
  if (config_.score_smoothing > 0.0) {
    premise_scores = ops::add_scalar(premise_scores, config_.score_smoothing);
    hypothesis_scores = ops::add_scalar(hypothesis_scores, config_.score_smoothing);
  }
  return AttentionVars{scores, normalize_or_uniform(premise_scores),
                       normalize_or_uniform(hypothesis_scores)};
}

Var EntailModel::classify(ParamBinder& bind, const AttentionVars& attention, Var premise_states,
                          Var hypothesis_states) const {
  auto pool = [&](Var dist, Var states) {
    const std::size_t len = states.value().rows();
    if (config_.pooling == Pooling::kWeightedSum) {
      return ops::matmul(ops::reshape(dist, {1, len}), states);
    }
    return ops::scale_rows(ops::row(states, len - 1), ops::pick(dist, len - 1));
  };
  Var x = ops::concat_cols(pool(attention.premise_dist, premise_states),
                           pool(attention.hypothesis_dist, hypothesis_states));
  const std::size_t hidden_layers = config_.classifier_dims.size();
  for (std::size_t layer = 0; layer <= hidden_layers; ++layer) {
    const std::string k = std::to_string(layer);
    x = ops::add_row(ops::matmul(x, bind("cls.W" + k)), bind("cls.b" + k));
    if (layer < hidden_layers) x = ops::relu(x);
  }
  return ops::softmax(ops::reshape(x, {kNumLabels}));
}

ForwardVars EntailModel::forward(ParamBinder& bind, std::span<const TokenId> premise,
                                 std::span<const TokenId> hypothesis) const {
  ForwardVars f;
  f.premise_states = encode_sentence(bind, premise);
  f.hypothesis_states = encode_sentence(bind, hypothesis);
  f.attention = attend(bind, f.premise_states, f.hypothesis_states);
  f.probs = classify(bind, f.attention, f.premise_states, f.hypothesis_states);
  return f;
}

AttentionOutputs attention_values(const AttentionVars& vars) {
  AttentionOutputs out;
  out.scores = vars.scores.value();
  const auto& p = vars.premise_dist.value().values();
  const auto& h = vars.hypothesis_dist.value().values();
  out.premise.assign(p.begin(), p.end());
  out.hypothesis.assign(h.begin(), h.end());
  return out;
}

Prediction EntailModel::predict(std::span<const TokenId> premise,
                                std::span<const TokenId> hypothesis) const {
  Tape tape(false);
  ParamBinder bind(tape, params_);
  ForwardVars f = forward(bind, premise, hypothesis);
  Prediction pred;
  const Tensor& probs = f.probs.value();
  for (std::size_t k = 0; k < kNumLabels; ++k) pred.probs[k] = probs[k];
  pred.attention = attention_values(f.attention);
  return pred;
}

std::size_t EntailModel::uniform_fallbacks() { return g_uniform_fallbacks.load(); }

}  // namespace milnli
