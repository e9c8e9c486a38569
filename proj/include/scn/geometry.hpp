#pragma once

#include <array>
#include <vector>

#include "scn/error.hpp"

namespace scn {

/// Eight-component patch offset: corner-wise difference of two boxes, in
/// pixel units, ordered (tl.x, tl.y, tr.x, tr.y, bl.x, bl.y, br.x, br.y).
using OffsetVector = std::array<float, 8>;

/// Axis-aligned patch box stored as the (x, y) positions of its top-left,
/// top-right, bottom-left and bottom-right corners.
struct BoundingBox {
  std::array<float, 8> corners{};

  static BoundingBox from_xywh(float x, float y, float w, float h);
  static BoundingBox from_corners(const std::array<float, 8>& corners);

  float x0() const { return corners[0]; }
  float y0() const { return corners[1]; }
  float x1() const { return corners[6]; }
  float y1() const { return corners[7]; }
  float width() const { return x1() - x0(); }
  float height() const { return y1() - y0(); }
  float center_x() const { return 0.5f * (x0() + x1()); }
  float center_y() const { return 0.5f * (y0() + y1()); }
  float area() const { return width() * height(); }

  bool operator==(const BoundingBox&) const = default;

  /// Checks axis alignment and positive extent; throws DataError otherwise.
  void validate() const;
};

/// o_ij = b_i - b_j, componentwise over the eight corner coordinates.
OffsetVector compute_offset(const BoundingBox& box_i, const BoundingBox& box_j);

/// Intersection area over union area, in [0, 1]. Degenerate unions yield 0.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Fraction of pairs with iou < threshold. Empty input is a UsageError.
double overlap_fraction(
    const std::vector<std::pair<BoundingBox, BoundingBox>>& pairs,
    double threshold);

}  // namespace scn
