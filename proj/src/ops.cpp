#include "scn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scn {

namespace {

using detail::accumulate_grad;
using detail::TensorImpl;

bool tracked(Tape* tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

void require_matrix(const Tensor& t, const char* name) {
  if (t.ndim() != 2) {
    throw DimensionError(std::string(name) + " must be 2-D, got " +
                         shape_str(t.shape()));
  }
}

}  // namespace

Tensor fully_connected(Tape* tape, const Tensor& x, const Tensor& W,
                       const Tensor& b) {
  require_matrix(x, "fully_connected: x");
  require_matrix(W, "fully_connected: W");
  if (b.ndim() != 1 || b.dim(0) != W.dim(0) || W.dim(1) != x.dim(1)) {
    throw DimensionError("fully_connected: shapes do not conform: x " +
                         shape_str(x.shape()) + ", W " + shape_str(W.shape()) +
                         ", b " + shape_str(b.shape()));
  }
  const int n_rows = x.dim(0), d_in = x.dim(1), d_out = W.dim(0);
  Tensor out = Tensor::zeros({n_rows, d_out});
  const auto& xd = x.data();
  const auto& wd = W.data();
  const auto& bd = b.data();
  auto& od = out.data();
  for (int n = 0; n < n_rows; ++n) {
    const float* xrow = xd.data() + static_cast<size_t>(n) * d_in;
    for (int j = 0; j < d_out; ++j) {
      const float* wrow = wd.data() + static_cast<size_t>(j) * d_in;
      double acc = bd[static_cast<size_t>(j)];
      for (int i = 0; i < d_in; ++i) acc += double(wrow[i]) * double(xrow[i]);
      od[static_cast<size_t>(n) * d_out + j] = static_cast<float>(acc);
    }
  }
  if (tracked(tape, {&x, &W, &b})) {
    out.set_requires_grad(true);
    auto xi = x.impl(), wi = W.impl(), bi = b.impl(), oi = out.impl();
    tape->record("fully_connected", [xi, wi, bi, oi, n_rows, d_in, d_out] {
      const auto& dout = oi->grad;
      if (dout.empty()) return;
      if (xi->requires_grad) {
        std::vector<float> dx(xi->data.size(), 0.0f);
        for (int n = 0; n < n_rows; ++n) {
          for (int j = 0; j < d_out; ++j) {
            const float g = dout[static_cast<size_t>(n) * d_out + j];
            if (g == 0.0f) continue;
            const float* wrow = wi->data.data() + static_cast<size_t>(j) * d_in;
            float* dxrow = dx.data() + static_cast<size_t>(n) * d_in;
            for (int i = 0; i < d_in; ++i) dxrow[i] += g * wrow[i];
          }
        }
        accumulate_grad(*xi, dx);
      }
      if (wi->requires_grad) {
        std::vector<float> dw(wi->data.size(), 0.0f);
        for (int n = 0; n < n_rows; ++n) {
          const float* xrow = xi->data.data() + static_cast<size_t>(n) * d_in;
          for (int j = 0; j < d_out; ++j) {
            const float g = dout[static_cast<size_t>(n) * d_out + j];
            if (g == 0.0f) continue;
            float* dwrow = dw.data() + static_cast<size_t>(j) * d_in;
            for (int i = 0; i < d_in; ++i) dwrow[i] += g * xrow[i];
          }
        }
        accumulate_grad(*wi, dw);
      }
      if (bi->requires_grad) {
        std::vector<float> db(bi->data.size(), 0.0f);
        for (int j = 0; j < d_out; ++j) {
          double acc = 0.0;
          for (int n = 0; n < n_rows; ++n) {
            acc += dout[static_cast<size_t>(n) * d_out + j];
          }
          db[static_cast<size_t>(j)] = static_cast<float>(acc);
        }
        accumulate_grad(*bi, db);
      }
    });
  }
  return out;
}

Tensor linear(Tape* tape, const Tensor& x, const Tensor& W) {
  require_matrix(x, "linear: x");
  require_matrix(W, "linear: W");
  if (W.dim(1) != x.dim(1)) {
    throw DimensionError("linear: shapes do not conform: x " +
                         shape_str(x.shape()) + ", W " + shape_str(W.shape()));
  }
  const int n_rows = x.dim(0), d_in = x.dim(1), d_out = W.dim(0);
  Tensor out = Tensor::zeros({n_rows, d_out});
  const auto& xd = x.data();
  const auto& wd = W.data();
  auto& od = out.data();
  for (int n = 0; n < n_rows; ++n) {
    const float* xrow = xd.data() + static_cast<size_t>(n) * d_in;
    for (int j = 0; j < d_out; ++j) {
      const float* wrow = wd.data() + static_cast<size_t>(j) * d_in;
      double acc = 0.0;
      for (int i = 0; i < d_in; ++i) acc += double(wrow[i]) * double(xrow[i]);
      od[static_cast<size_t>(n) * d_out + j] = static_cast<float>(acc);
    }
  }
  if (tracked(tape, {&x, &W})) {
    out.set_requires_grad(true);
    auto xi = x.impl(), wi = W.impl(), oi = out.impl();
    tape->record("linear", [xi, wi, oi, n_rows, d_in, d_out] {
      const auto& dout = oi->grad;
      if (dout.empty()) return;
      if (xi->requires_grad) {
        std::vector<float> dx(xi->data.size(), 0.0f);
        for (int n = 0; n < n_rows; ++n) {
          for (int j = 0; j < d_out; ++j) {
            const float g = dout[static_cast<size_t>(n) * d_out + j];
            if (g == 0.0f) continue;
            const float* wrow = wi->data.data() + static_cast<size_t>(j) * d_in;
            float* dxrow = dx.data() + static_cast<size_t>(n) * d_in;
            for (int i = 0; i < d_in; ++i) dxrow[i] += g * wrow[i];
          }
        }
        accumulate_grad(*xi, dx);
      }
      if (wi->requires_grad) {
        std::vector<float> dw(wi->data.size(), 0.0f);
        for (int n = 0; n < n_rows; ++n) {
          const float* xrow = xi->data.data() + static_cast<size_t>(n) * d_in;
          for (int j = 0; j < d_out; ++j) {
            const float g = dout[static_cast<size_t>(n) * d_out + j];
            if (g == 0.0f) continue;
            float* dwrow = dw.data() + static_cast<size_t>(j) * d_in;
            for (int i = 0; i < d_in; ++i) dwrow[i] += g * xrow[i];
          }
        }
        accumulate_grad(*wi, dw);
      }
    });
  }
  return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape());
  const auto& ad = a.data();
  const auto& bd = b.data();
  auto& od = out.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] + bd[i];
  if (tracked(tape, {&a, &b})) {
    out.set_requires_grad(true);
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape->record("add", [ai, bi, oi] {
      const auto& dout = oi->grad;
      if (dout.empty()) return;
      if (ai->requires_grad) accumulate_grad(*ai, dout);
      if (bi->requires_grad) accumulate_grad(*bi, dout);
    });
  }
  return out;
}

Tensor conv2d(Tape* tape, const Tensor& x, const Tensor& kernel,
              const Tensor& bias, int stride, int pad) {
  if (x.ndim() != 4 || kernel.ndim() != 4 || bias.ndim() != 1) {
    throw DimensionError("conv2d: expected x [NxCxHxW], kernel [FxCxkhxkw], "
                         "bias [F]");
  }
  const int n_batch = x.dim(0), channels = x.dim(1), height = x.dim(2),
            width = x.dim(3);
  const int filters = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(1) != channels || bias.dim(0) != filters) {
    throw DimensionError("conv2d: kernel/bias do not match input: x " +
                         shape_str(x.shape()) + ", kernel " +
                         shape_str(kernel.shape()));
  }
  if (stride < 1 || pad < 0) {
    throw ConfigError("conv2d: stride must be >= 1 and pad >= 0");
  }
  const int ph = height + 2 * pad, pw = width + 2 * pad;
  if (kh > ph || kw > pw) {
    throw ConfigError("conv2d: kernel larger than padded input");
  }
  if ((ph - kh) % stride != 0 || (pw - kw) % stride != 0) {
    throw ConfigError("conv2d: non-integral output size (input " +
                      shape_str(x.shape()) + ", kernel " +
                      shape_str(kernel.shape()) + ", stride " +
                      std::to_string(stride) + ", pad " + std::to_string(pad) +
                      ")");
  }
  const int oh = (ph - kh) / stride + 1, ow = (pw - kw) / stride + 1;

  // Padded copy of the input; kept alive for the backward rule.
  auto padded = std::make_shared<std::vector<float>>(
      static_cast<size_t>(n_batch) * channels * ph * pw, 0.0f);
  {
    const auto& xd = x.data();
    for (int n = 0; n < n_batch; ++n) {
      for (int c = 0; c < channels; ++c) {
        const size_t src0 =
            (static_cast<size_t>(n) * channels + c) * height * width;
        const size_t dst0 = (static_cast<size_t>(n) * channels + c) * ph * pw;
        for (int h = 0; h < height; ++h) {
          std::copy_n(xd.data() + src0 + static_cast<size_t>(h) * width, width,
                      padded->data() + dst0 +
                          static_cast<size_t>(h + pad) * pw + pad);
        }
      }
    }
  }

  Tensor out = Tensor::zeros({n_batch, filters, oh, ow});
  {
    const auto& kd = kernel.data();
    const auto& bd = bias.data();
    auto& od = out.data();
    for (int n = 0; n < n_batch; ++n) {
      for (int f = 0; f < filters; ++f) {
        for (int y = 0; y < oh; ++y) {
          for (int xo = 0; xo < ow; ++xo) {
            double acc = bd[static_cast<size_t>(f)];
            for (int c = 0; c < channels; ++c) {
              const float* src = padded->data() +
                                 (static_cast<size_t>(n) * channels + c) * ph * pw +
                                 static_cast<size_t>(y) * stride * pw +
                                 static_cast<size_t>(xo) * stride;
              const float* krn = kd.data() +
                                 (static_cast<size_t>(f) * channels + c) * kh * kw;
              for (int i = 0; i < kh; ++i) {
                for (int j = 0; j < kw; ++j) {
                  acc += double(src[static_cast<size_t>(i) * pw + j]) *
                         double(krn[static_cast<size_t>(i) * kw + j]);
                }
              }
            }
            od[((static_cast<size_t>(n) * filters + f) * oh + y) * ow + xo] =
                static_cast<float>(acc);
          }
        }
      }
    }
  }

  if (tracked(tape, {&x, &kernel, &bias})) {
    out.set_requires_grad(true);
    auto xi = x.impl(), ki = kernel.impl(), bi = bias.impl(), oi = out.impl();
    tape->record("conv2d", [xi, ki, bi, oi, padded, n_batch, channels, height,
                            width, filters, kh, kw, stride, pad, ph, pw, oh,
                            ow] {
      const auto& dout = oi->grad;
      if (dout.empty()) return;
      if (xi->requires_grad) {
        std::vector<float> dpad(padded->size(), 0.0f);
        for (int n = 0; n < n_batch; ++n) {
          for (int f = 0; f < filters; ++f) {
            for (int y = 0; y < oh; ++y) {
              for (int xo = 0; xo < ow; ++xo) {
                const float g =
                    dout[((static_cast<size_t>(n) * filters + f) * oh + y) * ow +
                         xo];
                if (g == 0.0f) continue;
                for (int c = 0; c < channels; ++c) {
                  float* dst = dpad.data() +
                               (static_cast<size_t>(n) * channels + c) * ph * pw +
                               static_cast<size_t>(y) * stride * pw +
                               static_cast<size_t>(xo) * stride;
                  const float* krn =
                      ki->data.data() +
                      (static_cast<size_t>(f) * channels + c) * kh * kw;
                  for (int i = 0; i < kh; ++i) {
                    for (int j = 0; j < kw; ++j) {
                      dst[static_cast<size_t>(i) * pw + j] +=
                          g * krn[static_cast<size_t>(i) * kw + j];
                    }
                  }
                }
              }
            }
          }
        }
        std::vector<float> dx(xi->data.size(), 0.0f);
        for (int n = 0; n < n_batch; ++n) {
          for (int c = 0; c < channels; ++c) {
            const size_t src0 = (static_cast<size_t>(n) * channels + c) * ph * pw;
            const size_t dst0 =
                (static_cast<size_t>(n) * channels + c) * height * width;
            for (int h = 0; h < height; ++h) {
              std::copy_n(dpad.data() + src0 + static_cast<size_t>(h + pad) * pw +
                              pad,
                          width, dx.data() + dst0 + static_cast<size_t>(h) * width);
            }
          }
        }
        accumulate_grad(*xi, dx);
      }
      if (ki->requires_grad) {
        std::vector<float> dk(ki->data.size(), 0.0f);
        for (int f = 0; f < filters; ++f) {
          for (int c = 0; c < channels; ++c) {
            for (int i = 0; i < kh; ++i) {
              for (int j = 0; j < kw; ++j) {
                double acc = 0.0;
                for (int n = 0; n < n_batch; ++n) {
                  const float* douts =
                      dout.data() +
                      ((static_cast<size_t>(n) * filters + f) * oh) * ow;
                  const float* src =
                      padded->data() +
                      (static_cast<size_t>(n) * channels + c) * ph * pw;
                  for (int y = 0; y < oh; ++y) {
                    const float* row = src + (static_cast<size_t>(y) * stride + i) * pw +
                                       j;
                    for (int xo = 0; xo < ow; ++xo) {
                      acc += double(douts[static_cast<size_t>(y) * ow + xo]) *
                             double(row[static_cast<size_t>(xo) * stride]);
                    }
                  }
                }
                dk[((static_cast<size_t>(f) * channels + c) * kh + i) * kw + j] =
                    static_cast<float>(acc);
              }
            }
          }
        }
        accumulate_grad(*ki, dk);
      }
      if (bi->requires_grad) {
        std::vector<float> db(bi->data.size(), 0.0f);
        for (int f = 0; f < filters; ++f) {
          double acc = 0.0;
          for (int n = 0; n < n_batch; ++n) {
            const float* douts =
                dout.data() + ((static_cast<size_t>(n) * filters + f) * oh) * ow;
            for (int i = 0; i < oh * ow; ++i) acc += douts[i];
          }
          db[static_cast<size_t>(f)] = static_cast<float>(acc);
        }
        accumulate_grad(*bi, db);
      }
    });
  }
  return out;
}

Tensor relu(Tape* tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const auto& xd = x.data();
  auto& od = out.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = xd[i] > 0.0f ? xd[i] : 0.0f;
  if (tracked(tape, {&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl(), oi = out.impl();
    tape->record("relu", [xi, oi] {
      const auto& dout = oi->grad;
      if (dout.empty() || !xi->requires_grad) return;
      std::vector<float> dx(xi->data.size(), 0.0f);
      // Subgradient at exactly 0 is taken as 0.
      for (size_t i = 0; i < dx.size(); ++i) {
        dx[i] = xi->data[i] > 0.0f ? dout[i] : 0.0f;
      }
      accumulate_grad(*xi, dx);
    });
  }
  return out;
}

Tensor sigmoid(Tape* tape, const Tensor& x) {
  // Outputs are strictly inside (0, 1): deep saturation is clamped to the
  // nearest representable float inside the interval.
  constexpr float kBelowOne = 0x1.fffffep-1f;
  const float kAboveZero = std::numeric_limits<float>::denorm_min();
  Tensor out = Tensor::zeros(x.shape());
  const auto& xd = x.data();
  auto& od = out.data();
  for (size_t i = 0; i < od.size(); ++i) {
    const float v = xd[i];
    float y;
    if (v >= 0.0f) {
      y = std::min(1.0f / (1.0f + std::exp(-v)), kBelowOne);
    } else {
      const float e = std::exp(v);
      y = std::max(e / (1.0f + e), kAboveZero);
    }
    od[i] = y;
  }
  if (tracked(tape, {&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl(), oi = out.impl();
    tape->record("sigmoid", [xi, oi] {
      const auto& dout = oi->grad;
      if (dout.empty() || !xi->requires_grad) return;
      std::vector<float> dx(xi->data.size(), 0.0f);
      for (size_t i = 0; i < dx.size(); ++i) {
        const float y = oi->data[i];
        dx[i] = dout[i] * y * (1.0f - y);
      }
      accumulate_grad(*xi, dx);
    });
  }
  return out;
}

Tensor flatten_rows(Tape* tape, const Tensor& x) {
  if (x.ndim() < 2) {
    throw DimensionError("flatten_rows: need at least 2 dims, got " +
                         shape_str(x.shape()));
  }
  const int n_rows = x.dim(0);
  const int cols = static_cast<int>(x.numel() / n_rows);
  Tensor out = Tensor::from_data({n_rows, cols}, x.data());
  if (tracked(tape, {&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl(), oi = out.impl();
    tape->record("flatten_rows", [xi, oi] {
      const auto& dout = oi->grad;
      if (dout.empty() || !xi->requires_grad) return;
      accumulate_grad(*xi, dout);
    });
  }
  return out;
}

Tensor mse_loss(Tape* tape, const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("mse_loss: shape mismatch " + shape_str(pred.shape()) +
                         " vs " + shape_str(target.shape()));
  }
  if (target.requires_grad()) {
    throw UsageError("mse_loss: target must not require gradients");
  }
  const int n_rows = pred.dim(0);
  const auto& pd = pred.data();
  const auto& td = target.data();
  double acc = 0.0;
  for (size_t i = 0; i < pd.size(); ++i) {
    const double d = double(pd[i]) - double(td[i]);
    acc += d * d;
  }
  Tensor out = Tensor::scalar(static_cast<float>(acc / n_rows));
  if (tracked(tape, {&pred})) {
    out.set_requires_grad(true);
    auto pi = pred.impl(), ti = target.impl(), oi = out.impl();
    tape->record("mse_loss", [pi, ti, oi, n_rows] {
      const auto& dout = oi->grad;
      if (dout.empty() || !pi->requires_grad) return;
      const float scale = 2.0f * dout[0] / static_cast<float>(n_rows);
      std::vector<float> dp(pi->data.size(), 0.0f);
      for (size_t i = 0; i < dp.size(); ++i) {
        dp[i] = scale * (pi->data[i] - ti->data[i]);
      }
      accumulate_grad(*pi, dp);
    });
  }
  return out;
}

}  // namespace scn
