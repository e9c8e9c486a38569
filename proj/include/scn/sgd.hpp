#pragma once

#include <cstdint>
#include <vector>

#include "scn/tensor.hpp"

namespace scn {

/// Mini-batch SGD hyperparameters. Defaults: batch size 64, initial learning
/// rate 1e-3 dropped to 1e-4 after 100 epochs, weight decay 5e-4, at most 200
/// epochs, no momentum, no gradient clipping.
struct SgdConfig {
  float base_lr = 1e-3f;
  int lr_drop_epoch = 100;
  float dropped_lr = 1e-4f;
  float weight_decay = 5e-4f;
  float momentum = 0.0f;
  float grad_clip = 0.0f;  // global-norm clip threshold; 0 disables
  int batch_size = 64;
  int max_epochs = 200;
  uint64_t seed = 1;

  /// Throws ConfigError when a field is out of range.
  void validate() const;

  /// base_lr before lr_drop_epoch, dropped_lr from that epoch on.
  float learning_rate(int epoch) const;
};

/// Plain SGD with optional momentum: w <- w - lr(epoch) * (g + wd * w),
/// applied in parameter-list order. Momentum buffers are keyed by position,
/// so the same parameter list must be passed to every step.
class Sgd {
 public:
  explicit Sgd(SgdConfig config);

  const SgdConfig& config() const { return config_; }

  void zero_grad(std::vector<Tensor>& params);

  /// One update over populated gradients. A parameter whose gradient buffer
  /// was never touched is treated as having zero gradient.
  void step(std::vector<Tensor>& params, int epoch);

 private:
  SgdConfig config_;
  std::vector<std::vector<float>> velocity_;
};

enum class InitScheme { kUniformFanBalanced, kZeros };

/// Deterministic weight init. kUniformFanBalanced draws from U(-a, a) with
/// a = sqrt(6 / (fan_in + fan_out)); fans follow the usual convention
/// ([out x in] for matrices, [F x C x kh x kw] for conv kernels).
Tensor init_weights(Shape shape, InitScheme scheme, uint64_t seed,
                    bool requires_grad = false);

}  // namespace scn
