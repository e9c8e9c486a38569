#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scn/encoder.hpp"
#include "scn/patches.hpp"

namespace scn {

/// Regression target of the context module: the top stream's feature vector,
/// or the raw pixels of the target patch.
enum class TargetMode { kFeature, kRawPixel };

/// Which bottom-stream layers train alongside the context module.
enum class TuneDepth { kFcOnly, kFcPlusLastConv, kAllLayers };

std::string to_string(TargetMode mode);
std::string to_string(TuneDepth depth);
TargetMode target_mode_from_string(const std::string& s);
TuneDepth tune_depth_from_string(const std::string& s);

/// Offset-conditioned context module weights:
/// h2 = sigmoid(V1 h1 + V_loc o + b2), h3 = V2 h2 + b3.
struct SpatialContextWeights {
  Tensor v1;     // [D2 x D]
  Tensor v_loc;  // [D2 x 8]
  Tensor b2;     // [D2]
  Tensor v2;     // [Dtar x D2]
  Tensor b3;     // [Dtar]
};

struct ScnModelConfig {
  TargetMode mode = TargetMode::kFeature;
  TuneDepth tune_depth = TuneDepth::kFcOnly;
  int d2 = 0;                   // width of h2; 0 means "use D"
  float offset_divisor = 1.0f;  // offsets are divided by this before V_loc
};

/// The spatial context network: a frozen top encoder providing regression
/// targets, a trainable bottom encoder initialized to the identical weights,
/// and the context module mapping (h1, offset) to a predicted target.
class ScnModel {
 public:
  enum class Stream { kTop, kBottom };

  /// Both streams are bitwise copies of `reference`; context weights are
  /// drawn fan-balanced from `seed`.
  ScnModel(const Encoder& reference, const ScnModelConfig& config,
           uint64_t seed);

  /// Assembles a model from explicit parts (checkpoint loading, ablation).
  ScnModel(Encoder top, Encoder bottom, SpatialContextWeights context,
           const ScnModelConfig& config, bool ablated);

  TargetMode mode() const { return config_.mode; }
  TuneDepth tune_depth() const { return config_.tune_depth; }
  int d2() const { return config_.d2; }
  bool ablated() const { return ablated_; }
  float offset_divisor() const { return config_.offset_divisor; }
  int feature_dim() const { return top_.config().feature_dim(); }
  int target_dim() const;

  const Encoder& top_encoder() const { return top_; }
  Encoder& bottom_encoder() { return bottom_; }
  const Encoder& bottom_encoder() const { return bottom_; }
  SpatialContextWeights& context() { return context_; }
  const SpatialContextWeights& context() const { return context_; }

  /// Single patch [C x S x S] -> feature vector [D]. Never records gradients.
  Tensor encode(const Tensor& patch, Stream stream) const;

  /// Batched stream forward. The top stream is frozen: passing a tape for it
  /// is a UsageError.
  Tensor encode_batch(Tape* tape, const Tensor& batch, Stream stream) const;

  /// h2 = sigmoid(V1 h1 + V_loc (o / divisor) + b2); returns h3 = V2 h2 + b3.
  /// Offsets must be finite. An ablated model skips the V_loc term entirely.
  Tensor context_forward(Tape* tape, const Tensor& h1,
                         const Tensor& raw_offsets) const;

  /// Single-vector convenience: h1 [D] + one offset -> h3 [Dtar].
  Tensor context_predict(const Tensor& h1, const OffsetVector& offset) const;

  /// Parameters updated by training: context weights (minus V_loc when
  /// ablated) plus the bottom-encoder layers selected by tune_depth.
  std::vector<Tensor> trainable_parameters();

  /// All tensors in checkpoint directory order, prefixed top./bottom./context.
  std::vector<std::pair<std::string, Tensor>> named_tensors() const;

 private:
  void apply_trainability();

  Encoder top_;
  Encoder bottom_;
  SpatialContextWeights context_;
  ScnModelConfig config_;
  bool ablated_ = false;
};

/// Deep copy whose context module ignores offsets: V_loc is zeroed and
/// excluded from training.
ScnModel ablate_offset(const ScnModel& model);

/// Mean squared feature-regression loss (the training objective) over a
/// nonempty batch: targets come from the frozen top stream (feature mode) or
/// the target patch pixels (raw-pixel mode).
Tensor scn_loss(Tape* tape, ScnModel& model,
                std::span<const PairSample> batch);

// Batch assembly helpers shared by training, evaluation and the loss.
Tensor stack_patches(std::span<const PairSample> batch, bool target_side);
Tensor stack_offsets(std::span<const PairSample> batch);

}  // namespace scn
