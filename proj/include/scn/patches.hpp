#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scn/geometry.hpp"
#include "scn/image.hpp"
#include "scn/manifest.hpp"
#include "scn/tensor.hpp"

namespace scn {

/// Crops `box` out of `image` (clamping to the image bounds), bilinearly
/// resizes to out_size x out_size, and returns a [C x out_size x out_size]
/// tensor with pixel values in [0, 1]. A box with no image overlap is a
/// DataError; a degenerate out_size (< 2) is a ConfigError.
Tensor crop_resize(const Image& image, const BoundingBox& box, int out_size);

/// One training triple: two patches from the same image plus their offset.
struct PairSample {
  std::string image_id;
  BoundingBox box_i;  // target patch (top stream)
  BoundingBox box_j;  // input patch (bottom stream)
  Tensor patch_i;     // [C x S x S], values in [0, 1]
  Tensor patch_j;
  OffsetVector offset{};  // b_i - b_j
  int label_i = -1;
  int label_j = -1;
};

/// All ordered in-image box pairs (i, j), i != j, across the manifest,
/// restricted to `split` when given. Images with fewer than two boxes
/// contribute nothing.
std::vector<PairSample> pair_from_boxes(const DatasetManifest& manifest,
                                        int patch_size,
                                        std::optional<Split> split = {});

/// Like pair_from_boxes, but a record carrying a designated pair yields just
/// that directed pair. This is how the synthetic dataset's one-pair-per-image
/// layout is materialized.
std::vector<PairSample> pair_from_manifest(const DatasetManifest& manifest,
                                           int patch_size,
                                           std::optional<Split> split = {});

/// Uniformly places n_patches square crops of side patch_side and returns one
/// ordered sample per unordered pair (n*(n-1)/2 pairs). The image must exceed
/// patch_side on both sides.
std::vector<PairSample> pair_random(const Image& image,
                                    const std::string& image_id, int n_patches,
                                    int patch_side, int patch_size,
                                    uint64_t seed);

}  // namespace scn
