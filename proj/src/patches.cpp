#include "scn/patches.hpp"

#include <algorithm>
#include <cmath>

#include "scn/rng.hpp"

namespace scn {

Tensor crop_resize(const Image& image, const BoundingBox& box, int out_size) {
  if (out_size < 2) {
    throw ConfigError("crop_resize: out_size must be >= 2");
  }
  const float iw = static_cast<float>(image.width);
  const float ih = static_cast<float>(image.height);
  const float cx0 = std::max(0.0f, box.x0());
  const float cy0 = std::max(0.0f, box.y0());
  const float cx1 = std::min(iw, box.x1());
  const float cy1 = std::min(ih, box.y1());
  if (cx0 >= cx1 || cy0 >= cy1) {
    throw DataError("crop_resize: box lies fully outside the image");
  }

  const int channels = image.channels;
  const double sx = double(cx1 - cx0) / out_size;
  const double sy = double(cy1 - cy0) / out_size;
  Tensor patch = Tensor::zeros({channels, out_size, out_size});
  auto& out = patch.data();

  const int max_x = image.width - 1;
  const int max_y = image.height - 1;
  for (int oy = 0; oy < out_size; ++oy) {
    // Half-pixel-center sampling in source pixel coordinates.
    const double v = double(cy0) + (oy + 0.5) * sy - 0.5;
    const int y0 = static_cast<int>(std::floor(v));
    const double ty = v - y0;
    const int ya = std::clamp(y0, 0, max_y);
    const int yb = std::clamp(y0 + 1, 0, max_y);
    for (int ox = 0; ox < out_size; ++ox) {
      const double u = double(cx0) + (ox + 0.5) * sx - 0.5;
      const int x0 = static_cast<int>(std::floor(u));
      const double tx = u - x0;
      const int xa = std::clamp(x0, 0, max_x);
      const int xb = std::clamp(x0 + 1, 0, max_x);
      for (int c = 0; c < channels; ++c) {
        const double p00 = image.at(xa, ya, c) / 255.0;
        const double p10 = image.at(xb, ya, c) / 255.0;
        const double p01 = image.at(xa, yb, c) / 255.0;
        const double p11 = image.at(xb, yb, c) / 255.0;
        const double top = p00 + (p10 - p00) * tx;
        const double bot = p01 + (p11 - p01) * tx;
        out[(static_cast<size_t>(c) * out_size + oy) * out_size + ox] =
            static_cast<float>(top + (bot - top) * ty);
      }
    }
  }
  return patch;
}

namespace {

PairSample make_pair(const Image& image, const std::string& image_id,
                     const ManifestBox& target, const ManifestBox& input,
                     int patch_size) {
  PairSample s;
  s.image_id = image_id;
  s.box_i = target.box;
  s.box_j = input.box;
  s.patch_i = crop_resize(image, target.box, patch_size);
  s.patch_j = crop_resize(image, input.box, patch_size);
  s.offset = compute_offset(target.box, input.box);
  s.label_i = target.label;
  s.label_j = input.label;
  return s;
}

std::vector<PairSample> pairs_from_records(const DatasetManifest& manifest,
                                           int patch_size,
                                           std::optional<Split> split,
                                           bool honor_designated) {
  std::vector<PairSample> pairs;
  for (const auto& record : manifest.records) {
    if (split && record.split != *split) continue;
    if (record.boxes.size() < 2) continue;
    const Image image = read_image(manifest.image_path(record));
    if (honor_designated && record.pair) {
      const auto& p = *record.pair;
      pairs.push_back(make_pair(image, record.image_id,
                                record.boxes[static_cast<size_t>(p.target)],
                                record.boxes[static_cast<size_t>(p.input)],
                                patch_size));
      continue;
    }
    for (size_t i = 0; i < record.boxes.size(); ++i) {
      for (size_t j = 0; j < record.boxes.size(); ++j) {
        if (i == j) continue;
        pairs.push_back(make_pair(image, record.image_id, record.boxes[i],
                                  record.boxes[j], patch_size));
      }
    }
  }
  return pairs;
}

}  // namespace

std::vector<PairSample> pair_from_boxes(const DatasetManifest& manifest,
                                        int patch_size,
                                        std::optional<Split> split) {
  return pairs_from_records(manifest, patch_size, split, false);
}

std::vector<PairSample> pair_from_manifest(const DatasetManifest& manifest,
                                           int patch_size,
                                           std::optional<Split> split) {
  return pairs_from_records(manifest, patch_size, split, true);
}

std::vector<PairSample> pair_random(const Image& image,
                                    const std::string& image_id, int n_patches,
                                    int patch_side, int patch_size,
                                    uint64_t seed) {
  if (n_patches < 2) {
    throw ConfigError("pair_random: need at least 2 patches");
  }
  if (image.width <= patch_side || image.height <= patch_side) {
    throw DataError("pair_random: image no larger than patch_side");
  }
  Rng rng(seed);
  std::vector<ManifestBox> boxes;
  boxes.reserve(static_cast<size_t>(n_patches));
  for (int k = 0; k < n_patches; ++k) {
    const float side = static_cast<float>(patch_side);
    const float x = static_cast<float>(rng.uniform(0.0, image.width - side));
    const float y = static_cast<float>(rng.uniform(0.0, image.height - side));
    boxes.push_back({BoundingBox::from_xywh(x, y, side, side), -1, false});
  }
  // One ordered sample per unordered pair; swapping streams is not used.
  std::vector<PairSample> pairs;
  for (int i = 0; i < n_patches; ++i) {
    for (int j = i + 1; j < n_patches; ++j) {
      pairs.push_back(make_pair(image, image_id,
                                boxes[static_cast<size_t>(i)],
                                boxes[static_cast<size_t>(j)], patch_size));
    }
  }
  return pairs;
}

}  // namespace scn
