#pragma once

// Epoch loop for CobaModel: weighted sampling with replacement, weighted
// cross-entropy, backward, global-norm clipping, AdamW; validation after each
// epoch and best-validation-accuracy checkpoint selection.

#include "uavzone/coba.hpp"
#include "uavzone/dataset.hpp"
#include "uavzone/metrics.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uavzone {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double lr = 1e-4;
  double weight_decay = 0.01;
  std::optional<double> max_grad_norm = 1.0;  // nullopt disables clipping
  std::uint64_t seed = 0;
  bool weighted_sampling = true;  // false: uniform draws with replacement
  bool weighted_loss = true;      // false: unit class weights
  bool keep_best = true;          // restore the best-validation-accuracy parameters
  std::size_t eval_every = 1;     // validation cadence in epochs; the last epoch is always evaluated
  std::size_t eval_batch = 256;

  void validate() const;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::optional<Metrics> val;
  double wall_time_s = 0.0;
};

struct TrainResult {
  std::vector<EpochReport> epochs;
  std::size_t best_epoch = 0;  // 0 when no validation ran
  std::uint64_t steps = 0;
};

using EpochCallback = std::function<void(const EpochReport&)>;

// Class weights and sampler probabilities are taken from `inputs`.
TrainResult train(CobaModel& model, const data::ModelInputs& inputs, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Lower-level entry used by tests: explicit windows, weights and sampler.
TrainResult train(CobaModel& model, std::span<const data::FeatureWindow> train_windows,
                  std::span<const data::FeatureWindow> val_windows,
                  std::span<const double> class_weights, std::span<const double> sampler_probs,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

struct EvalResult {
  Metrics metrics;
  double loss = 0.0;  // class-weighted mean cross-entropy
  std::vector<int> predictions;
  std::vector<int> labels;
};

// Eval-mode pass over all windows; empty input is a DataError.
EvalResult evaluate_windows(const CobaModel& model, std::span<const data::FeatureWindow> windows,
                            std::span<const double> class_weights = {}, std::size_t batch = 256);
Metrics evaluate(const CobaModel& model, std::span<const data::FeatureWindow> windows);

// One JSON object per line; wall time is left out so reruns compare byte-identical.
std::string epoch_report_json(const EpochReport& report);
std::string curves_csv_header();
std::string curves_csv_row(const EpochReport& report);

}  // namespace uavzone
