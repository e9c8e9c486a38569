#include "scn/model.hpp"

#include <cmath>

#include "scn/rng.hpp"

namespace scn {

std::string to_string(TargetMode mode) {
  return mode == TargetMode::kFeature ? "feature" : "raw-pixel";
}

std::string to_string(TuneDepth depth) {
  switch (depth) {
    case TuneDepth::kFcOnly: return "fc-only";
    case TuneDepth::kFcPlusLastConv: return "fc-plus-last-conv";
    case TuneDepth::kAllLayers: return "all-layers";
  }
  return "fc-only";
}

TargetMode target_mode_from_string(const std::string& s) {
  if (s == "feature") return TargetMode::kFeature;
  if (s == "raw-pixel") return TargetMode::kRawPixel;
  throw ConfigError("unknown target mode '" + s + "'");
}

TuneDepth tune_depth_from_string(const std::string& s) {
  if (s == "fc-only") return TuneDepth::kFcOnly;
  if (s == "fc-plus-last-conv") return TuneDepth::kFcPlusLastConv;
  if (s == "all-layers") return TuneDepth::kAllLayers;
  throw ConfigError("unknown tune depth '" + s + "'");
}

namespace {

int target_dim_for(const EncoderConfig& encoder, const ScnModelConfig& cfg) {
  if (cfg.mode == TargetMode::kFeature) return encoder.feature_dim();
  return encoder.input_size * encoder.input_size * encoder.channels;
}

}  // namespace

ScnModel::ScnModel(const Encoder& reference, const ScnModelConfig& config,
                   uint64_t seed)
    : top_(reference.clone()), bottom_(reference.clone()), config_(config) {
  const int d = top_.config().feature_dim();
  if (config_.d2 <= 0) config_.d2 = d;
  if (config_.offset_divisor <= 0.0f) {
    throw ConfigError("scn: offset_divisor must be positive");
  }
  const int dtar = target_dim_for(top_.config(), config_);
  context_.v1 = init_weights({config_.d2, d}, InitScheme::kUniformFanBalanced,
                             derive_seed(seed, "context/v1"), true);
  context_.v_loc = init_weights({config_.d2, 8},
                                InitScheme::kUniformFanBalanced,
                                derive_seed(seed, "context/v_loc"), true);
  context_.b2 = init_weights({config_.d2}, InitScheme::kZeros, 0, true);
  // In raw-pixel mode the output layer starts at zero so an untrained model
  // decodes to black patches; gradients reach V1/V_loc as soon as V2 moves.
  context_.v2 = init_weights({dtar, config_.d2},
                             config_.mode == TargetMode::kRawPixel
                                 ? InitScheme::kZeros
                                 : InitScheme::kUniformFanBalanced,
                             derive_seed(seed, "context/v2"), true);
  context_.b3 = init_weights({dtar}, InitScheme::kZeros, 0, true);
  apply_trainability();
}

ScnModel::ScnModel(Encoder top, Encoder bottom, SpatialContextWeights context,
                   const ScnModelConfig& config, bool ablated)
    : top_(std::move(top)),
      bottom_(std::move(bottom)),
      context_(std::move(context)),
      config_(config),
      ablated_(ablated) {
  apply_trainability();
}

int ScnModel::target_dim() const {
  return target_dim_for(top_.config(), config_);
}

void ScnModel::apply_trainability() {
  for (auto& p : top_.parameters()) p.set_requires_grad(false);

  const size_t n_conv = bottom_.config().conv_layers.size();
  for (size_t l = 0; l < n_conv; ++l) {
    const bool trainable =
        config_.tune_depth == TuneDepth::kAllLayers ||
        (config_.tune_depth == TuneDepth::kFcPlusLastConv && l + 1 == n_conv);
    bottom_.parameters()[bottom_.conv_param_index(l)].set_requires_grad(trainable);
    bottom_.parameters()[bottom_.conv_param_index(l) + 1].set_requires_grad(trainable);
  }
  for (size_t l = 0; l < bottom_.config().fc_dims.size(); ++l) {
    bottom_.parameters()[bottom_.fc_param_index(l)].set_requires_grad(true);
    bottom_.parameters()[bottom_.fc_param_index(l) + 1].set_requires_grad(true);
  }

  context_.v1.set_requires_grad(true);
  context_.v_loc.set_requires_grad(!ablated_);
  context_.b2.set_requires_grad(true);
  context_.v2.set_requires_grad(true);
  context_.b3.set_requires_grad(true);
}

Tensor ScnModel::encode(const Tensor& patch, Stream stream) const {
  const auto& cfg = top_.config();
  if (patch.ndim() != 3 || patch.dim(0) != cfg.channels ||
      patch.dim(1) != cfg.input_size || patch.dim(2) != cfg.input_size) {
    throw DimensionError("encode: expected patch [" +
                         std::to_string(cfg.channels) + " x " +
                         std::to_string(cfg.input_size) + " x " +
                         std::to_string(cfg.input_size) + "], got " +
                         shape_str(patch.shape()));
  }
  Tensor batch = Tensor::from_data(
      {1, cfg.channels, cfg.input_size, cfg.input_size}, patch.data());
  const Encoder& enc = stream == Stream::kTop ? top_ : bottom_;
  Tensor out = enc.forward(nullptr, batch);
  return Tensor::from_data({out.dim(1)}, out.data());
}

Tensor ScnModel::encode_batch(Tape* tape, const Tensor& batch,
                              Stream stream) const {
  if (stream == Stream::kTop) {
    if (tape) {
      throw UsageError("encode_batch: the top stream is frozen and never "
                       "records gradients");
    }
    return top_.forward(nullptr, batch);
  }
  return bottom_.forward(tape, batch);
}

Tensor ScnModel::context_forward(Tape* tape, const Tensor& h1,
                                 const Tensor& raw_offsets) const {
  if (h1.ndim() != 2 || h1.dim(1) != feature_dim()) {
    throw DimensionError("context_forward: h1 must be [N x D]");
  }
  Tensor pre = fully_connected(tape, h1, context_.v1, context_.b2);
  if (!ablated_) {
    if (raw_offsets.ndim() != 2 || raw_offsets.dim(0) != h1.dim(0) ||
        raw_offsets.dim(1) != 8) {
      throw DimensionError("context_forward: offsets must be [N x 8]");
    }
    Tensor scaled = Tensor::zeros(raw_offsets.shape());
    const float inv = 1.0f / config_.offset_divisor;
    for (size_t k = 0; k < scaled.data().size(); ++k) {
      const float o = raw_offsets.data()[k];
      if (!std::isfinite(o)) {
        throw UsageError("context_forward: non-finite offset component");
      }
      scaled.data()[k] = o * inv;
    }
    pre = add(tape, pre, linear(tape, scaled, context_.v_loc));
  }
  Tensor h2 = sigmoid(tape, pre);
  return fully_connected(tape, h2, context_.v2, context_.b3);
}

Tensor ScnModel::context_predict(const Tensor& h1,
                                 const OffsetVector& offset) const {
  if (h1.ndim() != 1 || h1.dim(0) != feature_dim()) {
    throw DimensionError("context_predict: h1 must be a [D] vector");
  }
  Tensor h1_row = Tensor::from_data({1, h1.dim(0)}, h1.data());
  Tensor offsets = Tensor::from_data(
      {1, 8}, std::vector<float>(offset.begin(), offset.end()));
  Tensor out = context_forward(nullptr, h1_row, offsets);
  return Tensor::from_data({out.dim(1)}, out.data());
}

std::vector<Tensor> ScnModel::trainable_parameters() {
  std::vector<Tensor> params;
  for (auto& p : bottom_.parameters()) {
    if (p.requires_grad()) params.push_back(p);
  }
  params.push_back(context_.v1);
  if (!ablated_) params.push_back(context_.v_loc);
  params.push_back(context_.b2);
  params.push_back(context_.v2);
  params.push_back(context_.b3);
  return params;
}

std::vector<std::pair<std::string, Tensor>> ScnModel::named_tensors() const {
  std::vector<std::pair<std::string, Tensor>> out;
  const auto names = top_.parameter_names();
  for (size_t i = 0; i < names.size(); ++i) {
    out.emplace_back("top." + names[i], top_.parameters()[i]);
  }
  for (size_t i = 0; i < names.size(); ++i) {
    out.emplace_back("bottom." + names[i], bottom_.parameters()[i]);
  }
  out.emplace_back("context.v1", context_.v1);
  out.emplace_back("context.v_loc", context_.v_loc);
  out.emplace_back("context.b2", context_.b2);
  out.emplace_back("context.v2", context_.v2);
  out.emplace_back("context.b3", context_.b3);
  return out;
}

ScnModel ablate_offset(const ScnModel& model) {
  SpatialContextWeights context;
  context.v1 = model.context().v1.clone();
  context.v_loc = model.context().v_loc.clone();
  context.b2 = model.context().b2.clone();
  context.v2 = model.context().v2.clone();
  context.b3 = model.context().b3.clone();
  for (auto& v : context.v_loc.data()) v = 0.0f;
  ScnModelConfig config;
  config.mode = model.mode();
  config.tune_depth = model.tune_depth();
  config.d2 = model.d2();
  config.offset_divisor = model.offset_divisor();
  return ScnModel(model.top_encoder().clone(), model.bottom_encoder().clone(),
                  std::move(context), config, /*ablated=*/true);
}

Tensor stack_patches(std::span<const PairSample> batch, bool target_side) {
  if (batch.empty()) throw UsageError("stack_patches: empty batch");
  const Tensor& first = target_side ? batch[0].patch_i : batch[0].patch_j;
  const int c = first.dim(0), s = first.dim(1);
  Tensor out = Tensor::zeros({static_cast<int>(batch.size()), c, s, s});
  const size_t stride = first.data().size();
  for (size_t n = 0; n < batch.size(); ++n) {
    const Tensor& p = target_side ? batch[n].patch_i : batch[n].patch_j;
    if (p.data().size() != stride) {
      throw DimensionError("stack_patches: inconsistent patch shapes");
    }
    std::copy(p.data().begin(), p.data().end(),
              out.data().begin() + static_cast<long>(n * stride));
  }
  return out;
}

Tensor stack_offsets(std::span<const PairSample> batch) {
  if (batch.empty()) throw UsageError("stack_offsets: empty batch");
  Tensor out = Tensor::zeros({static_cast<int>(batch.size()), 8});
  for (size_t n = 0; n < batch.size(); ++n) {
    for (size_t k = 0; k < 8; ++k) {
      out.data()[n * 8 + k] = batch[n].offset[k];
    }
  }
  return out;
}

Tensor scn_loss(Tape* tape, ScnModel& model,
                std::span<const PairSample> batch) {
  if (batch.empty()) throw UsageError("scn_loss: empty batch");
  Tensor inputs = stack_patches(batch, /*target_side=*/false);
  Tensor targets;
  if (model.mode() == TargetMode::kFeature) {
    targets = model.encode_batch(nullptr, stack_patches(batch, true),
                                 ScnModel::Stream::kTop);
  } else {
    targets = flatten_rows(nullptr, stack_patches(batch, true));
  }
  Tensor h1 = model.encode_batch(tape, inputs, ScnModel::Stream::kBottom);
  Tensor h3 = model.context_forward(tape, h1, stack_offsets(batch));
  return mse_loss(tape, h3, targets);
}

}  // namespace scn
