#pragma once

#include "scn/image.hpp"
#include "scn/model.hpp"

namespace scn {

/// Decodes a raw-pixel-mode prediction into an 8-bit image: h3 reshaped to
/// (channels, side, side), clamped to [0, 1], quantized. Requires a model in
/// raw-pixel-target mode.
Image reconstruct_patch(const ScnModel& model, const Tensor& context_patch,
                        const OffsetVector& offset);

/// Pearson correlation between two equal-size images' pixels; 0 when either
/// image is constant.
double normalized_cross_correlation(const Image& a, const Image& b);

/// Mean pixel intensity in [0, 1].
double mean_intensity(const Image& image);

}  // namespace scn
