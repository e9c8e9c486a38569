#pragma once

#include <cstdint>

#include "scn/image.hpp"
#include "scn/manifest.hpp"

namespace scn {

/// Synthetic circles/squares/triangles dataset configuration. The defaults
/// give 300 circle-square pairs (horizontally offset, vertical center
/// difference within the scaled tolerance), 300 circle-triangle pairs
/// (vertically offset), and 200 circle-black pairs with uniformly random
/// offsets, split 600 train / 200 test.
struct SyntheticConfig {
  int canvas = 64;
  int n_circle_square = 300;
  int n_circle_triangle = 300;
  int n_circle_black = 200;
  int train_count = 600;
  float shape_min = 8.0f;       // shape radius / half-extent range, px
  float shape_max = 16.0f;
  float axis_tolerance = 30.0f; // at 224-px reference scale
  float box_margin = 0.25f;     // background margin around a shape, fraction
  int max_retries = 1000;

  int total() const {
    return n_circle_square + n_circle_triangle + n_circle_black;
  }
  /// Center-alignment tolerance in canvas pixels.
  float scaled_tolerance() const {
    return axis_tolerance * static_cast<float>(canvas) / 224.0f;
  }
  void validate() const;
};

struct SyntheticDataset {
  std::vector<Image> images;  // aligned with manifest.records
  DatasetManifest manifest;
};

/// Renders the dataset deterministically for (cfg, seed). Each image holds a
/// circle (the input patch) and its partner (square, triangle, or a black
/// region) as one designated pair; placements that cannot satisfy the layout
/// constraints are resampled up to cfg.max_retries.
SyntheticDataset gen_synthetic(const SyntheticConfig& cfg, uint64_t seed);

/// Writes images/ and manifest.jsonl under out_dir; returns the manifest
/// (with base_dir set) as re-read semantics expect it.
DatasetManifest save_synthetic(const std::filesystem::path& out_dir,
                               const SyntheticDataset& dataset);

// Anti-aliasing-free shape rasterizers (pixel centers inside -> 255).
void render_circle(Image& img, float cx, float cy, float radius);
void render_square(Image& img, float cx, float cy, float half_side);
void render_triangle(Image& img, float cx, float cy, float half_extent);

/// Canonical patch of one shape class on black background, used as a
/// matching template for reconstruction checks. `margin` matches the
/// generator's box_margin.
Image template_patch(ShapeClass shape, int side, float margin = 0.25f);

}  // namespace scn
