#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "scn/geometry.hpp"
#include "scn/rng.hpp"

using namespace scn;

namespace {

// Rasterized set-intersection oracle for integer boxes: counts unit pixels
// in the intersection and union. Exact for integer coordinates.
double iou_bruteforce(const BoundingBox& a, const BoundingBox& b) {
  const int x0 = static_cast<int>(std::min(a.x0(), b.x0()));
  const int y0 = static_cast<int>(std::min(a.y0(), b.y0()));
  const int x1 = static_cast<int>(std::max(a.x1(), b.x1()));
  const int y1 = static_cast<int>(std::max(a.y1(), b.y1()));
  long inter = 0, uni = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const bool in_a = x >= a.x0() && x < a.x1() && y >= a.y0() && y < a.y1();
      const bool in_b = x >= b.x0() && x < b.x1() && y >= b.y0() && y < b.y1();
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

BoundingBox random_int_box(Rng& rng, int canvas) {
  const int w = 1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(canvas / 2)));
  const int h = 1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(canvas / 2)));
  const int x = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(canvas - w)));
  const int y = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(canvas - h)));
  return BoundingBox::from_xywh(static_cast<float>(x), static_cast<float>(y),
                                static_cast<float>(w), static_cast<float>(h));
}

}  // namespace

TEST_CASE("bounding box corners and validation") {
  BoundingBox box = BoundingBox::from_xywh(10, 20, 20, 20);
  CHECK(box.corners == std::array<float, 8>{10, 20, 30, 20, 10, 40, 30, 40});
  CHECK(box.width() == 20.0f);
  CHECK(box.center_x() == 20.0f);

  CHECK_THROWS_AS(BoundingBox::from_xywh(0, 0, 0, 5), DataError);
  CHECK_THROWS_AS(BoundingBox::from_xywh(0, 0, 5, -1), DataError);
  // Skewed corners are rejected.
  CHECK_THROWS_AS(
      BoundingBox::from_corners({0, 0, 10, 1, 0, 10, 10, 11}), DataError);
}

TEST_CASE("compute_offset examples and antisymmetry") {
  BoundingBox a = BoundingBox::from_xywh(10, 20, 20, 20);
  const OffsetVector zero = compute_offset(a, a);
  for (float v : zero) CHECK(v == 0.0f);

  // b_i at (10,20)-(30,40), b_j at (50,20)-(70,40): pure x shift of -40.
  BoundingBox b = BoundingBox::from_xywh(50, 20, 20, 20);
  const OffsetVector offset = compute_offset(a, b);
  CHECK(offset == OffsetVector{-40, 0, -40, 0, -40, 0, -40, 0});

  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const BoundingBox u = random_int_box(rng, 100);
    const BoundingBox v = random_int_box(rng, 100);
    const OffsetVector uv = compute_offset(u, v);
    const OffsetVector vu = compute_offset(v, u);
    for (size_t k = 0; k < 8; ++k) CHECK(uv[k] == -vu[k]);
  }
}

TEST_CASE("iou identity, disjoint, symmetry, range") {
  BoundingBox a = BoundingBox::from_xywh(0, 0, 10, 10);
  CHECK(iou(a, a) == 1.0);
  BoundingBox b = BoundingBox::from_xywh(20, 20, 5, 5);
  CHECK(iou(a, b) == 0.0);

  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const BoundingBox u = random_int_box(rng, 60);
    const BoundingBox v = random_int_box(rng, 60);
    const double value = iou(u, v);
    CHECK(value >= 0.0);
    CHECK(value <= 1.0);
    CHECK(value == doctest::Approx(iou(v, u)));
  }
}

TEST_CASE("iou matches the rasterized brute force on 1000 integer boxes") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const BoundingBox u = random_int_box(rng, 48);
    const BoundingBox v = random_int_box(rng, 48);
    CHECK(std::abs(iou(u, v) - iou_bruteforce(u, v)) < 1e-6);
  }
}

TEST_CASE("overlap_fraction examples") {
  BoundingBox a = BoundingBox::from_xywh(0, 0, 10, 10);
  BoundingBox far = BoundingBox::from_xywh(30, 30, 10, 10);

  std::vector<std::pair<BoundingBox, BoundingBox>> identical(5, {a, a});
  CHECK(overlap_fraction(identical, 0.2) == 0.0);

  std::vector<std::pair<BoundingBox, BoundingBox>> disjoint(7, {a, far});
  CHECK(overlap_fraction(disjoint, 0.2) == 1.0);

  // Hand-built list: 3 overlapping-below-threshold pairs out of 10.
  BoundingBox nudged = BoundingBox::from_xywh(9, 9, 10, 10);  // iou ~ 0.005
  std::vector<std::pair<BoundingBox, BoundingBox>> mixed;
  for (int i = 0; i < 7; ++i) mixed.push_back({a, a});
  for (int i = 0; i < 3; ++i) mixed.push_back({a, nudged});
  CHECK(overlap_fraction(mixed, 0.2) == doctest::Approx(0.3));

  CHECK_THROWS_AS(overlap_fraction({}, 0.2), UsageError);
}
