#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scn/model.hpp"

namespace scn {

/// Extracted feature matrix with aligned labels. Rows follow the order of the
/// pair list they were extracted from.
struct FeatureSet {
  int n = 0;
  int d = 0;
  std::vector<float> features;  // n x d, row-major
  std::vector<int> labels;      // size n
  std::string source;           // "h1" | "h3" | "fused"
  std::string provenance;       // checkpoint/manifest identification

  std::span<const float> row(int i) const {
    return {features.data() + static_cast<size_t>(i) * d, static_cast<size_t>(d)};
  }
  void validate() const;
};

enum class FeatureKind { kH1, kH3 };

/// Per pair: kH1 is the bottom-stream feature of the target patch itself;
/// kH3 is the context module's prediction of that patch's features from the
/// partner patch and their offset. Labels are the target-patch labels.
FeatureSet extract_features(const ScnModel& model,
                            std::span<const PairSample> pairs,
                            FeatureKind which,
                            const std::string& provenance = "");

/// Per-dimension mean and standard deviation of a (train) feature set.
struct FeatureStats {
  std::vector<float> mean;
  std::vector<float> stddev;  // floored at 1e-6
};

FeatureStats compute_stats(const FeatureSet& train);

/// Applies (x - mean) / stddev per dimension.
FeatureSet standardize(const FeatureSet& set, const FeatureStats& stats);

/// Rowwise concatenation after standardizing each half with the provided
/// (train-split) statistics; set standardize_halves = false for a raw concat.
/// Rows must align: equal N and identical labels.
FeatureSet fuse_features(const FeatureSet& a, const FeatureSet& b,
                         const FeatureStats& stats_a,
                         const FeatureStats& stats_b,
                         bool standardize_halves = true);

/// Same envelope as checkpoints: JSON header {format_version, n, d, source,
/// provenance, labels} + float32 payload + CRC-64.
void save_features(const std::filesystem::path& path, const FeatureSet& set);
FeatureSet load_features(const std::filesystem::path& path);

}  // namespace scn
