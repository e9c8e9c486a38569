#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "scn/ops.hpp"
#include "scn/rng.hpp"
#include "scn/tensor.hpp"

namespace scn::testing {

/// Guarded relative error, as usual for float32 gradient checks: the
/// denominator is floored at 1 so that near-zero gradients are compared
/// absolutely.
inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

/// Central finite differences of `loss_fn` against the recorded gradient of
/// `param`. loss_fn must recompute the forward pass from current tensor
/// contents. Returns the worst guarded relative error over all coordinates.
inline double max_grad_error(Tensor param,
                             const std::function<float()>& loss_fn,
                             const std::vector<float>& analytic,
                             float eps = 1e-3f) {
  double worst = 0.0;
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
    worst = std::max(worst, rel_err(analytic[i], numeric));
  }
  return worst;
}

/// Test-only scalarizer: sum of all elements, with an exact backward rule.
/// Lives here so op-level checks stay independent of mse_loss.
inline Tensor sum_all(Tape* tape, const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  Tensor out = Tensor::scalar(static_cast<float>(acc));
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = out.impl();
    tape->record("test.sum_all", [xi, oi] {
      if (oi->grad.empty() || !xi->requires_grad) return;
      scn::detail::accumulate_grad(
          *xi, std::vector<float>(xi->data.size(), oi->grad[0]));
    });
  }
  return out;
}

inline Tensor rand_tensor(Shape shape, Rng& rng, float lo = -1.0f,
                          float hi = 1.0f, bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (auto& v : t.data()) {
    v = static_cast<float>(rng.uniform(lo, hi));
  }
  return t;
}

/// Unique scratch directory under the system temp dir; removed on
/// destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("scn_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace scn::testing
