#include "scn/geometry.hpp"

#include <algorithm>
#include <string>

namespace scn {

BoundingBox BoundingBox::from_xywh(float x, float y, float w, float h) {
  BoundingBox box;
  box.corners = {x, y, x + w, y, x, y + h, x + w, y + h};
  box.validate();
  return box;
}

BoundingBox BoundingBox::from_corners(const std::array<float, 8>& corners) {
  BoundingBox box;
  box.corners = corners;
  box.validate();
  return box;
}

void BoundingBox::validate() const {
  const auto& c = corners;
  const bool axis_aligned = c[1] == c[3] && c[5] == c[7] &&  // top/bottom rows
                            c[0] == c[4] && c[2] == c[6];    // left/right cols
  if (!axis_aligned) {
    throw DataError("bounding box corners are not axis-aligned");
  }
  if (!(width() > 0.0f) || !(height() > 0.0f)) {
    throw DataError("bounding box must have positive width and height");
  }
}

OffsetVector compute_offset(const BoundingBox& box_i,
                            const BoundingBox& box_j) {
  OffsetVector offset;
  for (size_t k = 0; k < offset.size(); ++k) {
    offset[k] = box_i.corners[k] - box_j.corners[k];
  }
  return offset;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(
      0.0, double(std::min(a.x1(), b.x1())) - double(std::max(a.x0(), b.x0())));
  const double iy = std::max(
      0.0, double(std::min(a.y1(), b.y1())) - double(std::max(a.y0(), b.y0())));
  const double inter = ix * iy;
  const double uni = double(a.area()) + double(b.area()) - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double overlap_fraction(
    const std::vector<std::pair<BoundingBox, BoundingBox>>& pairs,
    double threshold) {
  if (pairs.empty()) {
    throw UsageError("overlap_fraction: empty pair list");
  }
  size_t below = 0;
  for (const auto& [a, b] : pairs) {
    if (iou(a, b) < threshold) ++below;
  }
  return double(below) / double(pairs.size());
}

}  // namespace scn
