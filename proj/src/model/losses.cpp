#include "milnli/model/losses.hpp"

#include <atomic>

#include "milnli/numerics/errors.hpp"
#include "milnli/numerics/ops.hpp"
#include "milnli/util/log.hpp"

namespace milnli {
namespace {

Var vector_constant(Tape& tape, std::span<const double> values) {
  return tape.constant(Tensor::vector(std::vector<double>(values.begin(), values.end())));
}

std::atomic<std::size_t> g_clamped{0};

}  // namespace

void RegularizerWeights::validate() const {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) {
    throw ConfigError("regularizer weights must be non-negative");
  }
  if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError("tau must lie in [0, 1)");
}

Var cross_entropy(Var probs, Label gold) {
  Var p = ops::pick(probs, label_index(gold));
  if (p.value().item() < kProbabilityFloor) {
    if (g_clamped.fetch_add(1) == 0) {
      log::warning("cross-entropy: gold-class probability clamped at 1e-12");
    }
    p = probs.tape->constant(Tensor::scalar(kProbabilityFloor));
  }
  return ops::scale(ops::log(p), -1.0);
}

Var r1_entropy(Var premise_dist, Var hypothesis_dist) {
  return ops::add(ops::entropy(premise_dist), ops::entropy(hypothesis_dist));
}

Var r2_max(Var premise_dist, Var hypothesis_dist, Label gold) {
  const double premise_target = gold == Label::kNeutral ? 0.0 : 1.0;
  Var dp = ops::add_scalar(ops::max_element(premise_dist), -premise_target);
  Var dh = ops::add_scalar(ops::max_element(hypothesis_dist), -1.0);
  return ops::add(ops::square(dp), ops::square(dh));
}

Var r3_min(Var premise_dist, Var hypothesis_dist) {
  return ops::add(ops::square(ops::min_above(premise_dist, kNonZeroWeight)),
                  ops::square(ops::min_above(hypothesis_dist, kNonZeroWeight)));
}

double cross_entropy(std::span<const double> probs, Label gold) {
  Tape tape(false);
  return cross_entropy(vector_constant(tape, probs), gold).value().item();
}

double r1_entropy(std::span<const double> premise_dist, std::span<const double> hypothesis_dist) {
  Tape tape(false);
  return r1_entropy(vector_constant(tape, premise_dist), vector_constant(tape, hypothesis_dist))
      .value()
      .item();
}

double r2_max(std::span<const double> premise_dist, std::span<const double> hypothesis_dist,
              Label gold) {
  Tape tape(false);
  return r2_max(vector_constant(tape, premise_dist), vector_constant(tape, hypothesis_dist), gold)
      .value()
      .item();
}

double r3_min(std::span<const double> premise_dist, std::span<const double> hypothesis_dist) {
  Tape tape(false);
  return r3_min(vector_constant(tape, premise_dist), vector_constant(tape, hypothesis_dist))
      .value()
      .item();
}

Var instance_loss(const EntailModel& model, ParamBinder& bind, const EncodedInstance& instance,
                  const RegularizerWeights& weights) {
  ForwardVars f = model.forward(bind, instance.premise, instance.hypothesis);
  const AttentionVars& a = f.attention;
  Var loss = cross_entropy(f.probs, instance.label);
  if (weights.alpha != 0.0) {
    loss = ops::add(loss, ops::scale(r1_entropy(a.premise_dist, a.hypothesis_dist), weights.alpha));
  }
  if (weights.beta != 0.0) {
    loss = ops::add(loss, ops::scale(r2_max(a.premise_dist, a.hypothesis_dist, instance.label),
                                     weights.beta));
  }
  if (weights.gamma != 0.0) {
    loss = ops::add(loss, ops::scale(r3_min(a.premise_dist, a.hypothesis_dist), weights.gamma));
  }
  return loss;
}

Var total_loss(const EntailModel& model, ParamBinder& bind,
               std::span<const EncodedInstance> batch, const RegularizerWeights& weights) {
  if (batch.empty()) throw ContractError("total_loss on an empty batch");
  Var loss = instance_loss(model, bind, batch[0], weights);
  for (std::size_t k = 1; k < batch.size(); ++k) {
    loss = ops::add(loss, instance_loss(model, bind, batch[k], weights));
  }
  return loss;
}

}  // namespace milnli
