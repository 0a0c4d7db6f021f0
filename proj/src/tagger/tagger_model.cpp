#include "milnli/tagger/tagger_model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "milnli/harness/metrics.hpp"
#include "milnli/model/losses.hpp"
#include "milnli/numerics/errors.hpp"
#include "milnli/numerics/ops.hpp"
#include "milnli/util/kv.hpp"
#include "milnli/util/log.hpp"

namespace milnli {
namespace {

std::string prefix(Side side) { return side == Side::kPremise ? "crf.p." : "crf.h."; }

}  // namespace

std::map<std::string, std::string> TaggerConfig::to_map() const {
  auto m = model.to_map();
  m["tagger.tagging_weight"] = kv::format(tagging_weight);
  return m;
}

TaggerConfig TaggerConfig::from_map(const std::map<std::string, std::string>& m) {
  TaggerConfig c;
  c.model = ModelConfig::from_map(m);
  kv::read(m, "tagger.tagging_weight", c.tagging_weight);
  if (!(c.tagging_weight >= 0.0)) throw ConfigError("tagger.tagging_weight must be non-negative");
  return c;
}

Label TaggerPrediction::label() const {
  const auto it = std::max_element(probs.begin(), probs.end());
  return kAllLabels[static_cast<std::size_t>(it - probs.begin())];
}

Var crf_inputs(Var states, Var attention) { return ops::scale_rows(states, attention); }

TagSequence gold_tags(const IndexSet& highlights, std::size_t length) {
  TagSequence tags(length, 0);
  for (std::size_t i : highlights) {
    if (i >= length) throw ContractError("gold highlight outside the sentence");
    tags[i] = 1;
  }
  return tags;
}

void add_crf_params(ParameterSet& params, std::size_t hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5bd1e9955bd1e995ULL);
  const double limit = std::sqrt(6.0 / static_cast<double>(hidden + kNumTags));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Side side : {Side::kPremise, Side::kHypothesis}) {
    Tensor w({hidden, kNumTags});
    for (double& v : w.values()) v = dist(rng);
    params.add(prefix(side) + "W", std::move(w));
    params.add(prefix(side) + "b", Tensor({kNumTags}, 0.0));
    params.add(prefix(side) + "trans", Tensor({kNumTags, kNumTags}, 0.0));
    params.add(prefix(side) + "start", Tensor({kNumTags}, 0.0));
    params.add(prefix(side) + "stop", Tensor({kNumTags}, 0.0));
  }
}

namespace {

ParameterSet fresh_params(const TaggerConfig& config, std::size_t dim) {
  ParameterSet ps = init_entail_params(config.model, dim);
  add_crf_params(ps, config.model.hidden, config.model.seed);
  return ps;
}

}  // namespace

TaggerModel::TaggerModel(TaggerConfig config, std::shared_ptr<const EmbeddingTable> embeddings)
    : config_(config),
      model_(config.model, embeddings,
             fresh_params(config, embeddings ? embeddings->dim() : 0)) {}

TaggerModel::TaggerModel(TaggerConfig config, std::shared_ptr<const EmbeddingTable> embeddings,
                         ParameterSet params)
    : config_(config), model_(config.model, std::move(embeddings), std::move(params)) {
  ParameterSet reference;
  add_crf_params(reference, config_.model.hidden, config_.model.seed);
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const auto idx = model_.params().find(reference.name(i));
    if (!idx || model_.params().value(*idx).shape() != reference.value(i).shape()) {
      throw ContractError("parameter '" + reference.name(i) + "' missing or mis-shaped");
    }
  }
}

Var TaggerModel::emissions(ParamBinder& bind, Side side, Var states, Var attention) const {
  const std::string p = prefix(side);
  return ops::add_row(ops::matmul(crf_inputs(states, attention), bind(p + "W")), bind(p + "b"));
}

Var TaggerModel::joint_loss(ParamBinder& bind, const EncodedInstance& instance) const {
  return joint_loss(bind, instance, config_.tagging_weight);
}

Var TaggerModel::joint_loss(ParamBinder& bind, const EncodedInstance& instance,
                            double tagging_weight) const {
  const ForwardVars fv = model_.forward(bind, instance.premise, instance.hypothesis);
  Var loss = cross_entropy(fv.probs, instance.label);
  if (tagging_weight == 0.0) return loss;
  std::vector<Var> nll;
  for (Side side : {Side::kPremise, Side::kHypothesis}) {
    const bool premise = side == Side::kPremise;
    const std::string p = prefix(side);
    Var e = emissions(bind, side, premise ? fv.premise_states : fv.hypothesis_states,
                      premise ? fv.attention.premise_dist : fv.attention.hypothesis_dist);
    Var tr = bind(p + "trans"), start = bind(p + "start"), stop = bind(p + "stop");
    const TagSequence gold = gold_tags(instance.highlights(side), instance.ids(side).size());
    nll.push_back(ops::sub(ops::crf_log_partition(e, tr, start, stop),
                           ops::crf_sequence_score(e, tr, start, stop, gold)));
  }
  return ops::add(loss, ops::scale(ops::add(nll[0], nll[1]), 0.5 * tagging_weight));
}

CrfParams TaggerModel::crf_params(Side side) const {
  const std::string p = prefix(side);
  CrfParams c;
  c.transitions = params()[p + "trans"];
  c.start = params()[p + "start"];
  c.stop = params()[p + "stop"];
  return c;
}

TaggerPrediction TaggerModel::predict(std::span<const TokenId> premise,
                                      std::span<const TokenId> hypothesis) const {
  Tape tape(false);
  ParamBinder bind(tape, params());
  const ForwardVars fv = model_.forward(bind, premise, hypothesis);
  TaggerPrediction out;
  for (std::size_t k = 0; k < kNumLabels; ++k) out.probs[k] = fv.probs.value()[k];
  for (Side side : {Side::kPremise, Side::kHypothesis}) {
    const bool is_p = side == Side::kPremise;
    const Tensor e = emissions(bind, side, is_p ? fv.premise_states : fv.hypothesis_states,
                               is_p ? fv.attention.premise_dist : fv.attention.hypothesis_dist)
                         .value();
    const CrfParams c = crf_params(side);
    (is_p ? out.premise_tags : out.hypothesis_tags) = viterbi_decode(e, c);
    (is_p ? out.premise_marginals : out.hypothesis_marginals) = crf_positive_marginals(e, c);
  }
  return out;
}

Explanation tagger_explanation(const TaggerPrediction& prediction) {
  Explanation ex;
  ex.method = "tagger";
  for (Side side : {Side::kPremise, Side::kHypothesis}) {
    const bool is_p = side == Side::kPremise;
    const TagSequence& tags = is_p ? prediction.premise_tags : prediction.hypothesis_tags;
    const auto& marg = is_p ? prediction.premise_marginals : prediction.hypothesis_marginals;
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (tags[i] == 1) {
        ex.indices(side).insert(i);
        ex.scores(side)[i] = marg[i];
      }
    }
  }
  return ex;
}

DevScores evaluate_tagger(const TaggerModel& model, std::span<const EncodedInstance> dev) {
  DevScores s;
  if (dev.empty()) return s;
  std::vector<Explanation> expl;
  expl.reserve(dev.size());
  std::size_t correct = 0;
  for (const auto& inst : dev) {
    const TaggerPrediction p = model.predict(inst.premise, inst.hypothesis);
    correct += p.label() == inst.label;
    expl.push_back(tagger_explanation(p));
  }
  s.accuracy = static_cast<double>(correct) / static_cast<double>(dev.size());
  const TokenScoreReport r = token_prf(expl, dev);
  s.premise_f1 = r.premise.f1;
  s.hypothesis_f1 = r.hypothesis.f1;
  return s;
}

TaggerTrainResult train_tagger(TaggerModel initial, std::span<const EncodedInstance> train_set,
                               std::span<const EncodedInstance> dev,
                               const TaggerTrainConfig& config) {
  if (dev.empty()) throw ContractError("train_tagger: empty dev split");
  TaggerTrainResult result{initial, {}, 0};
  TaggerModel current = std::move(initial);
  DevScores best;
  bool have_best = false;
  std::size_t running_epoch = 1;
  auto loss = [&](ParamBinder& bind, const EncodedInstance& inst) {
    const bool warm = running_epoch <= config.warmup_epochs;
    return current.joint_loss(bind, inst, warm ? 0.0 : current.config().tagging_weight);
  };
  auto on_epoch = [&](std::size_t epoch, double mean_loss) {
    running_epoch = epoch + 1;
    const DevScores d = evaluate_tagger(current, dev);
    const bool candidate = epoch > config.warmup_epochs || config.warmup_epochs >= config.fit.epochs;
    const bool improved = candidate && (!have_best || d.hypothesis_f1 > best.hypothesis_f1 ||
                          (d.hypothesis_f1 == best.hypothesis_f1 && d.accuracy > best.accuracy));
    if (improved) {
      best = d;
      have_best = true;
      result.model.params() = current.params();
      result.best_epoch = epoch;
    }
    std::ostringstream msg;
    msg << "tagger epoch " << epoch << " loss " << mean_loss << " dev_acc " << d.accuracy
        << " dev_hyp_f1 " << d.hypothesis_f1;
    log::debug(msg.str());
    result.log.push_back(EpochRecord{epoch, mean_loss, d, false});
    return improved || epoch <= config.warmup_epochs;
  };
  fit(current.params(), train_set, loss, config.fit, on_epoch);
  for (auto& rec : result.log) rec.selected = rec.epoch == result.best_epoch;
  return result;
}

}  // namespace milnli
