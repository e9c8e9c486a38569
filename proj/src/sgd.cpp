#include "scn/sgd.hpp"

#include <cmath>

#include "scn/rng.hpp"

namespace scn {

void SgdConfig::validate() const {
  if (base_lr < 0.0f) throw ConfigError("sgd: base_lr must be nonnegative");
  if (dropped_lr < 0.0f) {
    throw ConfigError("sgd: dropped_lr must be nonnegative");
  }
  // base_lr == 0 is the zero-update smoke configuration; otherwise the
  // schedule must actually drop.
  if (base_lr > 0.0f && dropped_lr >= base_lr) {
    throw ConfigError("sgd: dropped_lr must be smaller than base_lr");
  }
  if (lr_drop_epoch <= 0) {
    throw ConfigError("sgd: lr_drop_epoch must be positive");
  }
  if (weight_decay < 0.0f) {
    throw ConfigError("sgd: weight_decay must be nonnegative");
  }
  if (momentum < 0.0f || momentum >= 1.0f) {
    throw ConfigError("sgd: momentum must be in [0, 1)");
  }
  if (grad_clip < 0.0f) throw ConfigError("sgd: grad_clip must be nonnegative");
  if (batch_size <= 0) throw ConfigError("sgd: batch_size must be positive");
  if (max_epochs <= 0) throw ConfigError("sgd: max_epochs must be positive");
}

float SgdConfig::learning_rate(int epoch) const {
  return epoch < lr_drop_epoch ? base_lr : dropped_lr;
}

Sgd::Sgd(SgdConfig config) : config_(config) { config_.validate(); }

void Sgd::zero_grad(std::vector<Tensor>& params) {
  for (auto& p : params) p.zero_grad();
}

void Sgd::step(std::vector<Tensor>& params, int epoch) {
  const float lr = config_.learning_rate(epoch);
  const bool use_momentum = config_.momentum > 0.0f;
  if (use_momentum && velocity_.size() != params.size()) {
    velocity_.assign(params.size(), {});
  }

  float clip_scale = 1.0f;
  if (config_.grad_clip > 0.0f) {
    double sq = 0.0;
    for (const auto& p : params) {
      if (!p.grad_allocated()) continue;
      for (float g : p.grad()) sq += double(g) * double(g);
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.grad_clip) {
      clip_scale = static_cast<float>(config_.grad_clip / norm);
    }
  }

  static const std::vector<float> kNoGrad;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& w = params[pi].data();
    const bool has_grad = params[pi].grad_allocated();
    const std::vector<float>& g = has_grad ? params[pi].grad() : kNoGrad;
    std::vector<float>* vel = nullptr;
    if (use_momentum) {
      if (velocity_[pi].size() != w.size()) velocity_[pi].assign(w.size(), 0.0f);
      vel = &velocity_[pi];
    }
    for (size_t i = 0; i < w.size(); ++i) {
      float step = (has_grad ? g[i] * clip_scale : 0.0f) +
                   config_.weight_decay * w[i];
      if (vel) {
        (*vel)[i] = config_.momentum * (*vel)[i] + step;
        step = (*vel)[i];
      }
      w[i] -= lr * step;
    }
  }
}

Tensor init_weights(Shape shape, InitScheme scheme, uint64_t seed,
                    bool requires_grad) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  if (scheme == InitScheme::kZeros) return t;

  const auto& s = t.shape();
  int64_t fan_in = 0, fan_out = 0;
  if (s.size() == 2) {
    fan_in = s[1];
    fan_out = s[0];
  } else if (s.size() == 4) {
    fan_in = int64_t(s[1]) * s[2] * s[3];
    fan_out = int64_t(s[0]) * s[2] * s[3];
  } else {
    fan_in = fan_out = t.numel();
  }
  const double a = std::sqrt(6.0 / double(fan_in + fan_out));
  Rng rng(seed);
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-a, a));
  return t;
}

}  // namespace scn
