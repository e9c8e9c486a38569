#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scn/geometry.hpp"

namespace scn {

enum class Split { kTrain, kTest };
enum class Provenance { kBBox, kRandom, kProposal };

std::string to_string(Split split);
std::string to_string(Provenance provenance);
Split split_from_string(const std::string& s);
Provenance provenance_from_string(const std::string& s);

/// Shape class ids used by the synthetic dataset.
enum ShapeClass : int {
  kCircle = 0,
  kSquare = 1,
  kTriangle = 2,
  kBlack = 3,
};

struct ManifestBox {
  BoundingBox box;
  int label = -1;        // class id, -1 when unlabeled
  bool clamped = false;  // true when an out-of-image proposal was clamped
};

/// A directed (input, target) pair of box indices within one record. Used by
/// the synthetic generator, where each image defines exactly one pair.
struct DesignatedPair {
  int input = 0;   // box feeding the bottom stream
  int target = 1;  // box whose representation is predicted
};

struct ManifestRecord {
  std::string image_id;
  std::string image_path;  // relative to the manifest's directory
  int width = 0;
  int height = 0;
  Split split = Split::kTrain;
  Provenance provenance = Provenance::kBBox;
  std::vector<ManifestBox> boxes;
  std::optional<DesignatedPair> pair;
};

/// Persisted dataset index: one JSON line per image.
struct DatasetManifest {
  std::vector<ManifestRecord> records;
  std::filesystem::path base_dir;  // directory image paths are relative to

  std::filesystem::path image_path(const ManifestRecord& record) const {
    return base_dir / record.image_path;
  }
  size_t count(Split split) const;

  /// Checks record well-formedness; with `check_images`, also that every
  /// referenced image file exists.
  void validate(bool check_images = false) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path,
                   const DatasetManifest& manifest);

/// One external object-proposal candidate.
struct Proposal {
  std::string image_id;
  float x = 0, y = 0, w = 0, h = 0;
  float confidence = 0;
};

struct ProposalFilter {
  float min_confidence = 0.1f;
  float aspect_lo = 1.0f / 3.0f;
  float aspect_hi = 3.0f;
};

/// Parses a JSON-lines proposal file ({image_id, x, y, w, h, confidence});
/// a malformed line raises DataError naming the line number.
std::vector<Proposal> parse_proposals(const std::filesystem::path& path);

/// Keeps proposals with confidence >= min_confidence and aspect ratio w/h in
/// [aspect_lo, aspect_hi], preserving order. Idempotent.
std::vector<Proposal> filter_proposals(const std::vector<Proposal>& proposals,
                                       const ProposalFilter& filter);

/// Ingests proposals against the images of `dataset`: filters, clamps
/// out-of-image boxes (flagging them), and returns a manifest whose records
/// carry the retained proposal boxes in source order.
DatasetManifest ingest_proposals(const std::filesystem::path& path,
                                 const DatasetManifest& dataset,
                                 const ProposalFilter& filter = {});

}  // namespace scn
