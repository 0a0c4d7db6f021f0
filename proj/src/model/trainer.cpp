#include "milnli/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "milnli/explain/attention_threshold.hpp"
#include "milnli/harness/metrics.hpp"
#include "milnli/numerics/adagrad.hpp"
#include "milnli/numerics/errors.hpp"
#include "milnli/numerics/ops.hpp"
#include "milnli/util/log.hpp"

namespace milnli {
namespace {

double entropy_of(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double parameter_norm(const ParameterSet& params) {
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double v : params.value(i).values()) sq += v * v;
  }
  return std::sqrt(sq);
}

void clip_gradients(Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double v : g.values()) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (auto& g : grads) {
    for (double& v : g.values()) v *= scale;
  }
}

}  // namespace

void fit(ParameterSet& params, std::span<const EncodedInstance> train,
         const InstanceLossFn& loss, const FitOptions& options, const EpochCallback& on_epoch) {
  if (train.empty()) throw ContractError("fit: empty training set");
  if (options.batch_size == 0) throw ConfigError("batch size must be positive");

  Adagrad optimizer(params, options.learning_rate, options.adagrad_epsilon);
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0, batch = 0; start < order.size();
         start += options.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      Tape tape;
      ParamBinder bind(tape, params);
      Var total = loss(bind, train[order[start]]);
      for (std::size_t k = start + 1; k < end; ++k) {
        total = ops::add(total, loss(bind, train[order[k]]));
      }
      const double value = total.value().item();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "training diverged: loss " << value << " at epoch " << epoch << ", batch "
            << batch << "; parameter norm " << parameter_norm(params);
        throw DivergenceError(msg.str());
      }
      epoch_loss += value;
      Gradients grads = tape.backward(total, params);
      if (options.clip_norm > 0.0) clip_gradients(grads, options.clip_norm);
      optimizer.step(params, grads);
    }
    const double mean_loss = epoch_loss / static_cast<double>(train.size());
    const bool improved = on_epoch ? on_epoch(epoch, mean_loss) : true;
    since_best = improved ? 0 : since_best + 1;
    if (options.patience > 0 && since_best >= options.patience) {
      log::info("early stop after epoch " + std::to_string(epoch));
      break;
    }
  }
}

std::vector<double> default_tau_grid() {
  std::vector<double> grid;
  for (int k = 0; k < 20; ++k) grid.push_back(0.05 * k);
  for (double t : {0.97, 0.99, 0.995, 0.999, 0.9999}) grid.push_back(t);
  return grid;
}

DevScores evaluate_dev(const EntailModel& model, std::span<const EncodedInstance> dev,
                       std::span<const double> tau_grid, bool threshold_normalized) {
  if (tau_grid.empty()) throw ContractError("evaluate_dev needs at least one tau");
  DevScores s;
  if (dev.empty()) return s;
  std::vector<Prediction> preds;
  preds.reserve(dev.size());
  std::size_t correct = 0;
  for (const auto& inst : dev) {
    preds.push_back(model.predict(inst.premise, inst.hypothesis));
    correct += preds.back().label() == inst.label;
    s.mean_premise_entropy += entropy_of(preds.back().attention.premise);
    s.mean_hypothesis_entropy += entropy_of(preds.back().attention.hypothesis);
  }
  const double n = static_cast<double>(dev.size());
  s.accuracy = static_cast<double>(correct) / n;
  s.mean_premise_entropy /= n;
  s.mean_hypothesis_entropy /= n;

  s.hypothesis_f1 = -1.0;
  std::vector<Explanation> expl(dev.size());
  for (double tau : tau_grid) {
    for (std::size_t k = 0; k < dev.size(); ++k) {
      expl[k] = threshold_attention(preds[k], ThresholdOptions{tau, threshold_normalized});
    }
    const TokenScoreReport r = token_prf(expl, dev);
    if (r.hypothesis.f1 > s.hypothesis_f1) {
      s.hypothesis_f1 = r.hypothesis.f1;
      s.premise_f1 = r.premise.f1;
      s.tau = tau;
    }
  }
  return s;
}

TrainResult train(EntailModel initial, std::span<const EncodedInstance> train_set,
                  std::span<const EncodedInstance> dev, const TrainConfig& config) {
  config.weights.validate();
  if (dev.empty()) throw ContractError("train: empty dev split");

  TrainResult result{initial, config.weights.tau, {}, 0, true};
  EntailModel current = std::move(initial);
  const std::vector<double> fixed{config.weights.tau};
  const std::span<const double> grid =
      config.tune_tau ? std::span<const double>(config.tau_grid) : std::span<const double>(fixed);

  // Snapshots not dominated in (dev accuracy, dev hypothesis F1). The final
  // choice needs the accuracy reference, which is only known after the run
  // when no baseline is given.
  struct Candidate {
    std::size_t epoch;
    DevScores dev;
    ParameterSet params;
  };
  std::vector<Candidate> front;
  double reference = config.baseline_dev_accuracy.value_or(0.0);

  const RegularizerWeights plain{0.0, 0.0, 0.0, config.weights.tau};
  std::size_t running_epoch = 1;
  auto loss = [&](ParamBinder& bind, const EncodedInstance& inst) {
    const bool warm = running_epoch <= config.warmup_epochs;
    return instance_loss(current, bind, inst, warm ? plain : config.weights);
  };
  auto on_epoch = [&](std::size_t epoch, double mean_loss) {
    running_epoch = epoch + 1;
    EpochRecord rec{epoch, mean_loss, evaluate_dev(current, dev, grid, config.threshold_normalized),
                    false};
    if (!config.baseline_dev_accuracy) reference = std::max(reference, rec.dev.accuracy);
    // Warmup snapshots never saw the regularizers and are not candidates.
    const bool candidate = !config.weights.any() || epoch > config.warmup_epochs ||
                           config.warmup_epochs >= config.fit.epochs;
    const bool dominated = !candidate ||
                           std::any_of(front.begin(), front.end(), [&](const Candidate& c) {
                             return c.dev.accuracy >= rec.dev.accuracy &&
                                    c.dev.hypothesis_f1 >= rec.dev.hypothesis_f1;
                           });
    if (!dominated) {
      std::erase_if(front, [&](const Candidate& c) {
        return rec.dev.accuracy >= c.dev.accuracy && rec.dev.hypothesis_f1 >= c.dev.hypothesis_f1;
      });
      front.push_back(Candidate{epoch, rec.dev, current.params()});
    }
    std::ostringstream msg;
    msg << "epoch " << epoch << " loss " << mean_loss << " dev_acc " << rec.dev.accuracy
        << " dev_hyp_f1 " << rec.dev.hypothesis_f1 << " tau " << rec.dev.tau;
    log::debug(msg.str());
    result.log.push_back(rec);
    // Counts as progress for patience: a new front member that is also admissible.
    if (epoch <= config.warmup_epochs) return true;
    return !dominated && rec.dev.accuracy >= reference - config.accuracy_margin;
  };

  fit(current.params(), train_set, loss, config.fit, on_epoch);

  const Candidate* chosen = nullptr;
  for (const auto& c : front) {
    if (c.dev.accuracy < reference - config.accuracy_margin) continue;
    if (!chosen || c.dev.hypothesis_f1 > chosen->dev.hypothesis_f1) chosen = &c;
  }
  if (!chosen) {
    log::warning("no epoch met the dev accuracy constraint; keeping the most accurate one");
    result.accuracy_constraint_met = false;
    for (const auto& c : front) {
      if (!chosen || c.dev.accuracy > chosen->dev.accuracy) chosen = &c;
    }
  }
  result.model.params() = chosen->params;
  result.tau = chosen->dev.tau;
  result.best_epoch = chosen->epoch;
  for (auto& rec : result.log) rec.selected = rec.epoch == chosen->epoch;
  return result;
}

double mean_attention_entropy(const EntailModel& model, std::span<const EncodedInstance> data,
                              Side side) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const auto& inst : data) {
    total += entropy_of(model.predict(inst.premise, inst.hypothesis).attention.dist(side));
  }
  return total / static_cast<double>(data.size());
}

}  // namespace milnli
