#include "scn/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "scn/rng.hpp"

namespace scn {

void SyntheticConfig::validate() const {
  if (canvas < 16) throw ConfigError("synthetic: canvas must be >= 16");
  if (n_circle_square <= 0 || n_circle_triangle <= 0 || n_circle_black <= 0) {
    throw ConfigError("synthetic: pair counts must be positive");
  }
  if (train_count <= 0 || train_count >= total()) {
    throw ConfigError("synthetic: train_count must split the dataset");
  }
  if (!(shape_min > 0.0f) || shape_max < shape_min) {
    throw ConfigError("synthetic: invalid shape size range");
  }
  if (box_margin < 0.0f) throw ConfigError("synthetic: negative box margin");
  if (max_retries <= 0) throw ConfigError("synthetic: max_retries must be positive");
}

void render_circle(Image& img, float cx, float cy, float radius) {
  const float r2 = radius * radius;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float dx = static_cast<float>(x) + 0.5f - cx;
      const float dy = static_cast<float>(y) + 0.5f - cy;
      if (dx * dx + dy * dy <= r2) img.set(x, y, 0, 255);
    }
  }
}

void render_square(Image& img, float cx, float cy, float half_side) {
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float dx = std::abs(static_cast<float>(x) + 0.5f - cx);
      const float dy = std::abs(static_cast<float>(y) + 0.5f - cy);
      if (dx <= half_side && dy <= half_side) img.set(x, y, 0, 255);
    }
  }
}

void render_triangle(Image& img, float cx, float cy, float half_extent) {
  // Upward-pointing isoceles: apex (cx, cy-s), base corners (cx+-s, cy+s).
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float px = static_cast<float>(x) + 0.5f;
      const float py = static_cast<float>(y) + 0.5f;
      if (py < cy - half_extent || py > cy + half_extent) continue;
      const float half_width = 0.5f * (py - cy + half_extent);
      if (std::abs(px - cx) <= half_width) img.set(x, y, 0, 255);
    }
  }
}

Image template_patch(ShapeClass shape, int side, float margin) {
  Image img = Image::black(side, side, 1);
  const float c = 0.5f * static_cast<float>(side);
  const float extent = c / (1.0f + margin);
  switch (shape) {
    case kCircle: render_circle(img, c, c, extent); break;
    case kSquare: render_square(img, c, c, extent); break;
    case kTriangle: render_triangle(img, c, c, extent); break;
    case kBlack: break;
  }
  return img;
}

namespace {

struct Placement {
  float cx = 0, cy = 0, extent = 0;  // box half-side = extent * (1 + margin)
};

float box_half(const Placement& p, float margin) {
  return p.extent * (1.0f + margin);
}

BoundingBox placement_box(const Placement& p, float margin) {
  const float h = box_half(p, margin);
  return BoundingBox::from_xywh(p.cx - h, p.cy - h, 2 * h, 2 * h);
}

// Places two shapes separated along `axis` (0 = x, 1 = y), centers aligned
// within `tol` on the other axis, boxes disjoint and inside the canvas.
bool place_axis_pair(Rng& rng, const SyntheticConfig& cfg, int axis,
                     Placement& circle, Placement& partner) {
  const auto canvas = static_cast<float>(cfg.canvas);
  const float tol = cfg.scaled_tolerance();
  const float half_c = box_half(circle, cfg.box_margin);
  const float half_p = box_half(partner, cfg.box_margin);
  const float sep = half_c + half_p + 1.0f;
  if (half_c + sep + half_p > canvas) return false;  // cannot fit disjointly

  // Along the separation axis: left slot then right slot, circle side random.
  const bool circle_first = rng.next_u64() & 1;
  const float half_lo = circle_first ? half_c : half_p;
  const float half_hi = circle_first ? half_p : half_c;
  const float lo_max = canvas - half_hi - sep;
  const float a_lo = static_cast<float>(
      rng.uniform(half_lo, std::max(double(half_lo), double(lo_max))));
  const float a_hi = static_cast<float>(
      rng.uniform(a_lo + sep, std::max(double(a_lo + sep), double(canvas - half_hi))));

  // Cross axis: partner center within tolerance of the circle's.
  const float c_cross = static_cast<float>(
      rng.uniform(half_c, std::max(double(half_c), double(canvas - half_c))));
  const float p_lo = std::max(half_p, c_cross - tol);
  const float p_hi = std::min(canvas - half_p, c_cross + tol);
  if (p_lo > p_hi) return false;
  const float p_cross = static_cast<float>(rng.uniform(p_lo, p_hi));

  const float circle_a = circle_first ? a_lo : a_hi;
  const float partner_a = circle_first ? a_hi : a_lo;
  if (axis == 0) {
    circle.cx = circle_a;
    circle.cy = c_cross;
    partner.cx = partner_a;
    partner.cy = p_cross;
  } else {
    circle.cy = circle_a;
    circle.cx = c_cross;
    partner.cy = partner_a;
    partner.cx = p_cross;
  }
  return true;
}

bool place_black_pair(Rng& rng, const SyntheticConfig& cfg, Placement& circle,
                      Placement& partner) {
  const auto canvas = static_cast<float>(cfg.canvas);
  const float half_c = box_half(circle, cfg.box_margin);
  const float half_p = box_half(partner, cfg.box_margin);
  if (2 * half_c > canvas || 2 * half_p > canvas) return false;
  circle.cx = static_cast<float>(rng.uniform(half_c, canvas - half_c));
  circle.cy = static_cast<float>(rng.uniform(half_c, canvas - half_c));
  partner.cx = static_cast<float>(rng.uniform(half_p, canvas - half_p));
  partner.cy = static_cast<float>(rng.uniform(half_p, canvas - half_p));
  // The target region must stay black: its box may not touch the circle's.
  const bool disjoint = std::abs(circle.cx - partner.cx) > half_c + half_p ||
                        std::abs(circle.cy - partner.cy) > half_c + half_p;
  return disjoint;
}

}  // namespace

SyntheticDataset gen_synthetic(const SyntheticConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, "synthetic/layout"));

  SyntheticDataset dataset;
  const int total = cfg.total();
  dataset.images.reserve(static_cast<size_t>(total));

  for (int idx = 0; idx < total; ++idx) {
    const ShapeClass partner_class =
        idx < cfg.n_circle_square
            ? kSquare
            : (idx < cfg.n_circle_square + cfg.n_circle_triangle ? kTriangle
                                                                 : kBlack);
    Placement circle, partner;
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      circle.extent =
          static_cast<float>(rng.uniform(cfg.shape_min, cfg.shape_max));
      partner.extent =
          static_cast<float>(rng.uniform(cfg.shape_min, cfg.shape_max));
      switch (partner_class) {
        case kSquare:  // circle horizontally offset from the square
          placed = place_axis_pair(rng, cfg, 0, circle, partner);
          break;
        case kTriangle:  // circle vertically offset from the triangle
          placed = place_axis_pair(rng, cfg, 1, circle, partner);
          break;
        default:
          placed = place_black_pair(rng, cfg, circle, partner);
          break;
      }
    }
    if (!placed) {
      throw ConfigError(
          "synthetic: could not place shapes within the retry cap; canvas too "
          "small for the configured shape sizes");
    }

    Image img = Image::black(cfg.canvas, cfg.canvas, 1);
    render_circle(img, circle.cx, circle.cy, circle.extent);
    switch (partner_class) {
      case kSquare: render_square(img, partner.cx, partner.cy, partner.extent); break;
      case kTriangle: render_triangle(img, partner.cx, partner.cy, partner.extent); break;
      default: break;
    }

    char id[32];
    std::snprintf(id, sizeof(id), "syn_%05d", idx);
    ManifestRecord record;
    record.image_id = id;
    record.image_path = std::string("images/") + id + ".pgm";
    record.width = cfg.canvas;
    record.height = cfg.canvas;
    record.provenance = Provenance::kBBox;
    record.boxes.push_back(
        {placement_box(circle, cfg.box_margin), kCircle, false});
    record.boxes.push_back(
        {placement_box(partner, cfg.box_margin), partner_class, false});
    record.pair = DesignatedPair{0, 1};  // circle feeds the bottom stream

    dataset.images.push_back(std::move(img));
    dataset.manifest.records.push_back(std::move(record));
  }

  // Seeded split: shuffle indices once, first train_count go to train.
  std::vector<int> order(static_cast<size_t>(total));
  for (int i = 0; i < total; ++i) order[static_cast<size_t>(i)] = i;
  Rng split_rng(derive_seed(seed, "synthetic/split"));
  split_rng.shuffle(order);
  for (int rank = 0; rank < total; ++rank) {
    dataset.manifest.records[static_cast<size_t>(order[static_cast<size_t>(rank)])]
        .split = rank < cfg.train_count ? Split::kTrain : Split::kTest;
  }
  return dataset;
}

DatasetManifest save_synthetic(const std::filesystem::path& out_dir,
                               const SyntheticDataset& dataset) {
  std::filesystem::create_directories(out_dir / "images");
  for (size_t i = 0; i < dataset.images.size(); ++i) {
    write_image(out_dir / dataset.manifest.records[i].image_path,
                dataset.images[i]);
  }
  DatasetManifest manifest = dataset.manifest;
  manifest.base_dir = out_dir;
  save_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

}  // namespace scn
