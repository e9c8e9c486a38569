#include "scn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>

#include "scn/model.hpp"
#include "scn/ops.hpp"
#include "scn/rng.hpp"

namespace scn {

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& c : cases) w = std::max(w, c.max_rel_err);
  return w;
}

bool GradCheckReport::all_below(double tol) const {
  for (const auto& c : cases) {
    if (!(c.max_rel_err < tol)) return false;
  }
  return true;
}

namespace {

double guarded_rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

Tensor random_tensor(Shape shape, Rng& rng, float lo, float hi,
                     bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// Compares recorded gradients of every tensor in `params` against central
// finite differences of `loss_fn`.
double check_params(std::vector<Tensor> params,
                    const std::function<float()>& loss_fn,
                    const std::function<float()>& backward_pass, float eps) {
  const float loss0 = backward_pass();
  (void)loss0;
  double worst = 0.0;
  for (auto& param : params) {
    const std::vector<float> analytic = param.grad();
    auto& values = param.data();
    for (size_t i = 0; i < values.size(); ++i) {
      const float orig = values[i];
      const float hi = orig + eps;
      const float lo = orig - eps;
      values[i] = hi;
      const double loss_hi = loss_fn();
      values[i] = lo;
      const double loss_lo = loss_fn();
      values[i] = orig;
      const double numeric = (loss_hi - loss_lo) / (double(hi) - double(lo));
      worst = std::max(worst, guarded_rel_err(analytic[i], numeric));
    }
  }
  return worst;
}

GradCheckCase check_fully_connected(Rng& rng, float eps) {
  Tensor x = random_tensor({3, 4}, rng, -1, 1, true);
  Tensor w = random_tensor({5, 4}, rng, -1, 1, true);
  Tensor b = random_tensor({5}, rng, -1, 1, true);
  Tensor target = random_tensor({3, 5}, rng, -1, 1);
  auto loss = [&](Tape* tape) {
    return mse_loss(tape, fully_connected(tape, x, w, b), target);
  };
  auto loss_fn = [&] { return loss(nullptr).item(); };
  auto backward = [&] {
    for (Tensor* t : {&x, &w, &b}) t->zero_grad();
    Tape tape;
    Tensor value = loss(&tape);
    tape.backward(value);
    return value.item();
  };
  return {"fully_connected", check_params({x, w, b}, loss_fn, backward, eps)};
}

GradCheckCase check_linear_add(Rng& rng, float eps) {
  Tensor x = random_tensor({2, 6}, rng, -1, 1, true);
  Tensor w = random_tensor({3, 6}, rng, -1, 1, true);
  Tensor other = random_tensor({2, 3}, rng, -1, 1, true);
  Tensor target = random_tensor({2, 3}, rng, -1, 1);
  auto loss = [&](Tape* tape) {
    return mse_loss(tape, add(tape, linear(tape, x, w), other), target);
  };
  auto loss_fn = [&] { return loss(nullptr).item(); };
  auto backward = [&] {
    for (Tensor* t : {&x, &w, &other}) t->zero_grad();
    Tape tape;
    Tensor value = loss(&tape);
    tape.backward(value);
    return value.item();
  };
  return {"linear+add", check_params({x, w, other}, loss_fn, backward, eps)};
}

GradCheckCase check_conv2d(Rng& rng, float eps) {
  // Moderate magnitudes keep the float32 forward-rounding noise in the
  // finite-difference quotient well under the 1e-3 tolerance.
  Tensor x = random_tensor({2, 2, 5, 5}, rng, -0.5, 0.5, true);
  Tensor k = random_tensor({3, 2, 3, 3}, rng, -0.4, 0.4, true);
  Tensor b = random_tensor({3}, rng, -0.2, 0.2, true);
  Tensor target = random_tensor({2, 3, 3, 3}, rng, -0.5, 0.5);
  auto loss = [&](Tape* tape) {
    Tensor out = conv2d(tape, x, k, b, 2, 1);
    return mse_loss(tape, flatten_rows(tape, out),
                    flatten_rows(nullptr, target));
  };
  auto loss_fn = [&] { return loss(nullptr).item(); };
  auto backward = [&] {
    for (Tensor* t : {&x, &k, &b}) t->zero_grad();
    Tape tape;
    Tensor value = loss(&tape);
    tape.backward(value);
    return value.item();
  };
  return {"conv2d", check_params({x, k, b}, loss_fn, backward, eps)};
}

GradCheckCase check_activation(Rng& rng, float eps, bool use_relu) {
  Tensor x = random_tensor({3, 7}, rng, -2, 2, true);
  if (use_relu) {
    // Keep coordinates away from the kink.
    for (auto& v : x.data()) {
      if (std::abs(v) < 4 * eps) v = 5 * eps;
    }
  }
  Tensor target = random_tensor({3, 7}, rng, 0, 1);
  auto loss = [&](Tape* tape) {
    Tensor y = use_relu ? relu(tape, x) : sigmoid(tape, x);
    return mse_loss(tape, y, target);
  };
  auto loss_fn = [&] { return loss(nullptr).item(); };
  auto backward = [&] {
    x.zero_grad();
    Tape tape;
    Tensor value = loss(&tape);
    tape.backward(value);
    return value.item();
  };
  return {use_relu ? "relu" : "sigmoid",
          check_params({x}, loss_fn, backward, eps)};
}

// Finite differences are invalid within eps of a relu kink: a perturbation
// that flips a unit's sign makes the quotient measure the kink, not the
// subgradient. Returns the smallest |pre-activation| across the bottom
// stream's relu inputs for this instance.
float min_relu_margin(const ScnModel& model, std::span<const PairSample> pairs) {
  const Encoder& enc = model.bottom_encoder();
  const auto& cfg = enc.config();
  const auto& params = enc.parameters();
  float margin = std::numeric_limits<float>::infinity();
  auto update = [&margin](const Tensor& pre) {
    for (float v : pre.data()) margin = std::min(margin, std::abs(v));
  };
  Tensor h = stack_patches(pairs, /*target_side=*/false);
  for (size_t l = 0; l < cfg.conv_layers.size(); ++l) {
    const auto& c = cfg.conv_layers[l];
    h = conv2d(nullptr, h, params[enc.conv_param_index(l)],
               params[enc.conv_param_index(l) + 1], c.stride, c.pad);
    update(h);
    h = relu(nullptr, h);
  }
  h = flatten_rows(nullptr, h);
  for (size_t l = 0; l + 1 < cfg.fc_dims.size(); ++l) {
    h = fully_connected(nullptr, h, params[enc.fc_param_index(l)],
                        params[enc.fc_param_index(l) + 1]);
    update(h);
    h = relu(nullptr, h);
  }
  return margin;
}

GradCheckCase check_scn_end_to_end(Rng& rng, float eps) {
  EncoderConfig cfg;
  cfg.conv_layers = {{2, 4, 2, 1}};
  cfg.fc_dims = {8, 4};
  cfg.input_size = 8;
  cfg.channels = 1;
  ScnModelConfig mcfg;
  mcfg.tune_depth = TuneDepth::kAllLayers;

  const float kink_band = 5.0f * eps;
  std::optional<ScnModel> model;
  std::vector<PairSample> pairs;
  for (int attempt = 0; attempt < 200; ++attempt) {
    Encoder reference(cfg, rng.next_u64());
    ScnModel candidate(reference, mcfg, rng.next_u64());
    std::vector<PairSample> candidate_pairs;
    for (int k = 0; k < 3; ++k) {
      PairSample p;
      p.image_id = "grad";
      p.box_i = BoundingBox::from_xywh(0, 0, 8, 8);
      p.box_j = BoundingBox::from_xywh(8, 0, 8, 8);
      p.patch_i = random_tensor({1, 8, 8}, rng, 0, 1);
      p.patch_j = random_tensor({1, 8, 8}, rng, 0, 1);
      for (auto& o : p.offset) o = static_cast<float>(rng.uniform(-8, 8));
      candidate_pairs.push_back(std::move(p));
    }
    if (min_relu_margin(candidate, candidate_pairs) > kink_band) {
      model.emplace(std::move(candidate));
      pairs = std::move(candidate_pairs);
      break;
    }
  }
  if (!model) {
    throw NumericError("gradcheck: could not sample a kink-free instance");
  }

  auto loss_fn = [&] { return scn_loss(nullptr, *model, pairs).item(); };
  auto backward = [&] {
    for (auto& p : model->trainable_parameters()) p.zero_grad();
    Tape tape;
    Tensor value = scn_loss(&tape, *model, pairs);
    tape.backward(value);
    return value.item();
  };
  return {"scn-end-to-end",
          check_params(model->trainable_parameters(), loss_fn, backward, eps)};
}

}  // namespace

GradCheckReport run_gradient_suite(int instances, uint64_t seed, float eps) {
  GradCheckReport report;
  for (int k = 0; k < instances; ++k) {
    Rng rng(derive_seed(seed, "gradcheck/instance." + std::to_string(k)));
    const std::string tag = "#" + std::to_string(k) + " ";
    for (auto make :
         {check_fully_connected, check_linear_add, check_conv2d}) {
      GradCheckCase c = make(rng, eps);
      c.name = tag + c.name;
      report.cases.push_back(std::move(c));
    }
    GradCheckCase r = check_activation(rng, eps, true);
    r.name = tag + r.name;
    report.cases.push_back(std::move(r));
    GradCheckCase s = check_activation(rng, eps, false);
    s.name = tag + s.name;
    report.cases.push_back(std::move(s));
    GradCheckCase e = check_scn_end_to_end(rng, eps);
    e.name = tag + e.name;
    report.cases.push_back(std::move(e));
  }
  return report;
}

}  // namespace scn
