#pragma once

#include "scn/tensor.hpp"

namespace scn {

// Differentiable ops. Each records its backward rule on `tape` when tape is
// non-null and at least one input requires a gradient; passing tape == nullptr
// runs pure inference (nothing is recorded, outputs carry no grad).

/// out[n,j] = b[j] + sum_i W[j,i] * x[n,i].  x: [N x Din], W: [Dout x Din],
/// b: [Dout] -> [N x Dout].
Tensor fully_connected(Tape* tape, const Tensor& x, const Tensor& W,
                       const Tensor& b);

/// Bias-free variant: out = x * W^T.
Tensor linear(Tape* tape, const Tensor& x, const Tensor& W);

/// Elementwise sum of two same-shape tensors.
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);

/// Cross-correlation. x: [N x C x H x W], kernel: [F x C x kh x kw],
/// bias: [F] -> [N x F x H' x W'] with H' = (H + 2*pad - kh)/stride + 1.
/// A non-integral output size is a ConfigError.
Tensor conv2d(Tape* tape, const Tensor& x, const Tensor& kernel,
              const Tensor& bias, int stride, int pad);

Tensor relu(Tape* tape, const Tensor& x);

/// Elementwise logistic 1/(1+exp(-x)); backward uses y*(1-y).
Tensor sigmoid(Tape* tape, const Tensor& x);

/// [N x d1 x ... x dk] -> [N x (d1*...*dk)].
Tensor flatten_rows(Tape* tape, const Tensor& x);

/// (1/N) * sum_n ||pred_n - target_n||^2 over rows. The target must not
/// require gradients. Returns a scalar tensor.
Tensor mse_loss(Tape* tape, const Tensor& pred, const Tensor& target);

}  // namespace scn
