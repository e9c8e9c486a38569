#include "scn/encoder.hpp"

#include "scn/rng.hpp"

namespace scn {

int EncoderConfig::conv_output_side() const {
  int side = input_size;
  for (size_t l = 0; l < conv_layers.size(); ++l) {
    const auto& c = conv_layers[l];
    if (c.filters <= 0 || c.kernel <= 0 || c.stride <= 0 || c.pad < 0) {
      throw ConfigError("encoder: invalid conv layer " + std::to_string(l));
    }
    const int padded = side + 2 * c.pad;
    if (c.kernel > padded || (padded - c.kernel) % c.stride != 0) {
      throw ConfigError("encoder: conv layer " + std::to_string(l) +
                        " does not tile a " + std::to_string(side) +
                        "-px input");
    }
    side = (padded - c.kernel) / c.stride + 1;
  }
  return side;
}

int EncoderConfig::flatten_dim() const {
  const int side = conv_output_side();
  const int ch = conv_layers.empty() ? channels : conv_layers.back().filters;
  return ch * side * side;
}

void EncoderConfig::validate() const {
  if (input_size < 8) throw ConfigError("encoder: input_size must be >= 8");
  if (channels != 1 && channels != 3) {
    throw ConfigError("encoder: channels must be 1 or 3");
  }
  if (fc_dims.empty()) throw ConfigError("encoder: need at least one fc layer");
  for (int d : fc_dims) {
    if (d <= 0) throw ConfigError("encoder: fc widths must be positive");
  }
  (void)conv_output_side();  // validates the conv stack
}

Encoder::Encoder(EncoderConfig config, uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  int in_ch = config_.channels;
  for (size_t l = 0; l < config_.conv_layers.size(); ++l) {
    const auto& c = config_.conv_layers[l];
    const std::string tag = "encoder/conv" + std::to_string(l);
    params_.push_back(init_weights({c.filters, in_ch, c.kernel, c.kernel},
                                   InitScheme::kUniformFanBalanced,
                                   derive_seed(seed, tag + ".kernel"), true));
    params_.push_back(init_weights({c.filters}, InitScheme::kZeros,
                                   derive_seed(seed, tag + ".bias"), true));
    in_ch = c.filters;
  }
  int in_dim = config_.flatten_dim();
  for (size_t l = 0; l < config_.fc_dims.size(); ++l) {
    const int out_dim = config_.fc_dims[l];
    const std::string tag = "encoder/fc" + std::to_string(l);
    params_.push_back(init_weights({out_dim, in_dim},
                                   InitScheme::kUniformFanBalanced,
                                   derive_seed(seed, tag + ".weight"), true));
    params_.push_back(init_weights({out_dim}, InitScheme::kZeros,
                                   derive_seed(seed, tag + ".bias"), true));
    in_dim = out_dim;
  }
}

Tensor Encoder::forward(Tape* tape, const Tensor& batch) const {
  if (batch.ndim() != 4 || batch.dim(1) != config_.channels ||
      batch.dim(2) != config_.input_size || batch.dim(3) != config_.input_size) {
    throw DimensionError("encoder: expected batch [N x " +
                         std::to_string(config_.channels) + " x " +
                         std::to_string(config_.input_size) + " x " +
                         std::to_string(config_.input_size) + "], got " +
                         shape_str(batch.shape()));
  }
  Tensor x = batch;
  for (size_t l = 0; l < config_.conv_layers.size(); ++l) {
    const auto& c = config_.conv_layers[l];
    const size_t p = conv_param_index(l);
    x = conv2d(tape, x, params_[p], params_[p + 1], c.stride, c.pad);
    x = relu(tape, x);
  }
  x = flatten_rows(tape, x);
  for (size_t l = 0; l < config_.fc_dims.size(); ++l) {
    const size_t p = fc_param_index(l);
    x = fully_connected(tape, x, params_[p], params_[p + 1]);
    if (l + 1 < config_.fc_dims.size()) x = relu(tape, x);
  }
  return x;
}

std::vector<std::string> Encoder::parameter_names() const {
  std::vector<std::string> names;
  for (size_t l = 0; l < config_.conv_layers.size(); ++l) {
    names.push_back("conv" + std::to_string(l) + ".kernel");
    names.push_back("conv" + std::to_string(l) + ".bias");
  }
  for (size_t l = 0; l < config_.fc_dims.size(); ++l) {
    names.push_back("fc" + std::to_string(l) + ".weight");
    names.push_back("fc" + std::to_string(l) + ".bias");
  }
  return names;
}

Encoder Encoder::clone() const {
  Encoder copy;
  copy.config_ = config_;
  copy.params_.reserve(params_.size());
  for (const auto& p : params_) copy.params_.push_back(p.clone());
  return copy;
}

}  // namespace scn
