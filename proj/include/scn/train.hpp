#pragma once

#include <functional>
#include <optional>
#include <span>

#include "scn/model.hpp"
#include "scn/sgd.hpp"

namespace scn {

struct EpochStats {
  int epoch = 0;
  float train_mse = 0.0f;
  std::optional<float> test_mse;
};

struct TrainingReport {
  std::vector<EpochStats> epochs;

  float final_train_mse() const { return epochs.back().train_mse; }
  float final_test_mse() const { return *epochs.back().test_mse; }
  float first_test_mse() const { return *epochs.front().test_mse; }
};

/// Feature-regression training loop: per-epoch seeded reshuffle, mini-batch
/// SGD over the parameters selected by the model's tune depth, frozen-top
/// targets precomputed once. Non-finite loss aborts with a NumericError
/// naming the epoch and batch. With eval_each_epoch the test MSE is recorded
/// every epoch (the testing-error curve); otherwise only for the final one.
/// `on_epoch`, when set, fires after each completed epoch, so callers keep a
/// partial record even when a later epoch diverges.
TrainingReport train(ScnModel& model, std::span<const PairSample> train_pairs,
                     std::span<const PairSample> test_pairs,
                     const SgdConfig& config, bool eval_each_epoch = true,
                     const std::function<void(const EpochStats&)>& on_epoch = {});

/// Dataset MSE of the current model, batched, no gradients.
float evaluate_mse(ScnModel& model, std::span<const PairSample> pairs,
                   int batch_size = 256);

/// Supervised pretraining of the small reference encoder on patch class
/// labels: a linear head regresses one-hot targets under the squared loss and
/// is dropped afterwards. Produces the frozen top stream at desk scale.
Encoder pretrain_reference_encoder(const std::vector<Tensor>& patches,
                                   const std::vector<int>& labels,
                                   const EncoderConfig& encoder_config,
                                   const SgdConfig& sgd_config, uint64_t seed);

}  // namespace scn
