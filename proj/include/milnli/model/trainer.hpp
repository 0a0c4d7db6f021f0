#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "milnli/corpus/vocabulary.hpp"
#include "milnli/model/entail_model.hpp"
#include "milnli/model/losses.hpp"

namespace milnli {

/// Loss of a single training instance, built on the binder's tape.
using InstanceLossFn = std::function<Var(ParamBinder& bind, const EncodedInstance& instance)>;

struct FitOptions {
  double learning_rate = 0.05;
  double adagrad_epsilon = 1e-10;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  /// Stop after this many epochs without a new selected snapshot; 0 = never.
  std::size_t patience = 0;
  /// Rescale each batch gradient to at most this L2 norm; 0 disables.
  double clip_norm = 0.0;
  std::uint64_t seed = 1;
};

/// Called after every epoch with the mean training loss per instance.
/// Returns true when the current parameters become the new best snapshot.
using EpochCallback = std::function<bool(std::size_t epoch, double mean_loss)>;

/// Shuffled mini-batch Adagrad over `train`, summing instance losses per
/// batch. Throws DivergenceError (with epoch, batch and parameter norm) if a
/// batch loss is not finite.
void fit(ParameterSet& params, std::span<const EncodedInstance> train,
         const InstanceLossFn& loss, const FitOptions& options, const EpochCallback& on_epoch);

std::vector<double> default_tau_grid();

struct TrainConfig {
  FitOptions fit;
  RegularizerWeights weights;
  /// Epochs of plain cross-entropy before the regularizers switch on.
  std::size_t warmup_epochs = 5;
  /// Dev accuracy of an unregularized reference model. Snapshots more than
  /// `accuracy_margin` below it are never selected. When unset, the best dev
  /// accuracy seen so far in this run is the reference.
  std::optional<double> baseline_dev_accuracy;
  double accuracy_margin = 0.05;
  /// Pick tau on dev from `tau_grid`; otherwise use weights.tau.
  bool tune_tau = true;
  std::vector<double> tau_grid = default_tau_grid();
  bool threshold_normalized = false;
};

struct DevScores {
  double accuracy = 0.0;
  double premise_f1 = 0.0;
  double hypothesis_f1 = 0.0;
  double tau = 0.0;
  double mean_premise_entropy = 0.0;
  double mean_hypothesis_entropy = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  DevScores dev;
  bool selected = false;
};

struct TrainResult {
  EntailModel model;
  /// Threshold chosen with the selected snapshot.
  double tau = 0.5;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  /// False if no epoch met the accuracy constraint; the most accurate
  /// snapshot is returned instead.
  bool accuracy_constraint_met = true;
};

/// Dev accuracy, attention entropies, and hypothesis-F1 of thresholded
/// attention at the best tau of `tau_grid` (or the single `fixed_tau`).
DevScores evaluate_dev(const EntailModel& model, std::span<const EncodedInstance> dev,
                       std::span<const double> tau_grid, bool threshold_normalized);

/// Trains `initial` with the regularized loss and selects the epoch with the
/// highest dev hypothesis F1 among those whose accuracy stays within the
/// margin.
TrainResult train(EntailModel initial, std::span<const EncodedInstance> train,
                  std::span<const EncodedInstance> dev, const TrainConfig& config);

/// Mean entropy of the attention distributions on one side.
double mean_attention_entropy(const EntailModel& model, std::span<const EncodedInstance> data,
                              Side side);

}  // namespace milnli
