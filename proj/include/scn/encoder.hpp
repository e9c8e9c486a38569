#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scn/ops.hpp"
#include "scn/sgd.hpp"
#include "scn/tensor.hpp"

namespace scn {

struct ConvSpec {
  int filters = 0;
  int kernel = 0;
  int stride = 1;
  int pad = 0;

  bool operator==(const ConvSpec&) const = default;
};

/// Patch encoder architecture: a conv/ReLU stack followed by fully-connected
/// layers; the last fc output (width D, no activation) is the feature vector.
struct EncoderConfig {
  // 32 -> 16 -> 8 -> 4 px; 4x4 kernels so every stride-2 layer tiles exactly.
  std::vector<ConvSpec> conv_layers = {{8, 4, 2, 1}, {16, 4, 2, 1}, {32, 4, 2, 1}};
  std::vector<int> fc_dims = {128, 64};
  int input_size = 32;
  int channels = 1;

  bool operator==(const EncoderConfig&) const = default;

  int feature_dim() const { return fc_dims.back(); }
  /// Spatial side after the conv stack; throws ConfigError when any layer
  /// produces a non-integral or non-positive size.
  int conv_output_side() const;
  int flatten_dim() const;
  void validate() const;
};

/// A concrete encoder: parameters plus the forward pass. Parameter order is
/// fixed (conv kernel/bias per layer, then fc weight/bias per layer) and
/// mirrored by parameter_names().
class Encoder {
 public:
  Encoder() = default;

  /// Fan-balanced uniform weights, zero biases, deterministic in seed.
  Encoder(EncoderConfig config, uint64_t seed);

  const EncoderConfig& config() const { return config_; }

  /// [N x C x S x S] -> [N x D].
  Tensor forward(Tape* tape, const Tensor& batch) const;

  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  std::vector<std::string> parameter_names() const;

  /// Index into parameters() of the first parameter of conv layer `layer`,
  /// and of fc layer `layer`.
  size_t conv_param_index(size_t layer) const { return 2 * layer; }
  size_t fc_param_index(size_t layer) const {
    return 2 * (config_.conv_layers.size() + layer);
  }

  /// Deep copy; parameter tensors are cloned, so the copy trains
  /// independently of the original.
  Encoder clone() const;

 private:
  EncoderConfig config_;
  std::vector<Tensor> params_;
};

}  // namespace scn
