#include "scn/reconstruct.hpp"

#include <algorithm>
#include <cmath>

namespace scn {

Image reconstruct_patch(const ScnModel& model, const Tensor& context_patch,
                        const OffsetVector& offset) {
  if (model.mode() != TargetMode::kRawPixel) {
    throw UsageError("reconstruct_patch: model is not in raw-pixel-target mode");
  }
  const Tensor h1 = model.encode(context_patch, ScnModel::Stream::kBottom);
  const Tensor h3 = model.context_predict(h1, offset);

  const auto& cfg = model.top_encoder().config();
  const int side = cfg.input_size;
  Image img = Image::black(side, side, cfg.channels);
  // h3 is the flattened patch, channels-first row-major, values in [0, 1].
  for (int c = 0; c < cfg.channels; ++c) {
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        const float v = h3.data()[(static_cast<size_t>(c) * side + y) * side + x];
        const float clamped = std::clamp(v, 0.0f, 1.0f);
        img.set(x, y, c, static_cast<uint8_t>(std::lround(clamped * 255.0f)));
      }
    }
  }
  return img;
}

double normalized_cross_correlation(const Image& a, const Image& b) {
  if (a.pixels.size() != b.pixels.size() || a.pixels.empty()) {
    throw UsageError("ncc: images must have identical nonzero size");
  }
  const size_t n = a.pixels.size();
  double mean_a = 0.0, mean_b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_a += a.pixels[i];
    mean_b += b.pixels[i];
  }
  mean_a /= double(n);
  mean_b /= double(n);
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a.pixels[i] - mean_a;
    const double db = b.pixels[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) return 0.0;
  return cov / std::sqrt(var_a * var_b);
}

double mean_intensity(const Image& image) {
  if (image.pixels.empty()) throw UsageError("mean_intensity: empty image");
  double sum = 0.0;
  for (uint8_t p : image.pixels) sum += p;
  return sum / (255.0 * double(image.pixels.size()));
}

}  // namespace scn
