#include "scn/features.hpp"

#include <cmath>

#include "scn/envelope.hpp"

namespace scn {

namespace {
constexpr int kFormatVersion = 1;
}

void FeatureSet::validate() const {
  if (n < 0 || d <= 0) throw DataError("feature set: bad dimensions");
  if (features.size() != static_cast<size_t>(n) * d) {
    throw DataError("feature set: matrix size does not match n*d");
  }
  if (labels.size() != static_cast<size_t>(n)) {
    throw DataError("feature set: label count does not match n");
  }
}

FeatureSet extract_features(const ScnModel& model,
                            std::span<const PairSample> pairs,
                            FeatureKind which, const std::string& provenance) {
  if (pairs.empty()) throw UsageError("extract_features: empty pair list");
  FeatureSet set;
  set.n = static_cast<int>(pairs.size());
  set.source = which == FeatureKind::kH1 ? "h1" : "h3";
  set.provenance = provenance;
  set.labels.reserve(pairs.size());
  for (const auto& p : pairs) set.labels.push_back(p.label_i);

  Tensor rows;
  if (which == FeatureKind::kH1) {
    rows = model.encode_batch(nullptr, stack_patches(pairs, /*target_side=*/true),
                              ScnModel::Stream::kBottom);
  } else {
    Tensor h1 = model.encode_batch(nullptr,
                                   stack_patches(pairs, /*target_side=*/false),
                                   ScnModel::Stream::kBottom);
    rows = model.context_forward(nullptr, h1, stack_offsets(pairs));
  }
  set.d = rows.dim(1);
  set.features = rows.data();
  set.validate();
  return set;
}

FeatureStats compute_stats(const FeatureSet& train) {
  train.validate();
  if (train.n == 0) throw UsageError("compute_stats: empty feature set");
  FeatureStats stats;
  stats.mean.assign(static_cast<size_t>(train.d), 0.0f);
  stats.stddev.assign(static_cast<size_t>(train.d), 0.0f);
  for (int j = 0; j < train.d; ++j) {
    double sum = 0.0;
    for (int i = 0; i < train.n; ++i) sum += train.row(i)[static_cast<size_t>(j)];
    const double mean = sum / train.n;
    double sq = 0.0;
    for (int i = 0; i < train.n; ++i) {
      const double dlt = train.row(i)[static_cast<size_t>(j)] - mean;
      sq += dlt * dlt;
    }
    stats.mean[static_cast<size_t>(j)] = static_cast<float>(mean);
    stats.stddev[static_cast<size_t>(j)] =
        std::max(1e-6f, static_cast<float>(std::sqrt(sq / train.n)));
  }
  return stats;
}

FeatureSet standardize(const FeatureSet& set, const FeatureStats& stats) {
  set.validate();
  if (stats.mean.size() != static_cast<size_t>(set.d)) {
    throw DimensionError("standardize: stats dimension mismatch");
  }
  FeatureSet out = set;
  for (int i = 0; i < set.n; ++i) {
    for (int j = 0; j < set.d; ++j) {
      const size_t idx = static_cast<size_t>(i) * set.d + j;
      out.features[idx] = (set.features[idx] - stats.mean[static_cast<size_t>(j)]) /
                          stats.stddev[static_cast<size_t>(j)];
    }
  }
  return out;
}

FeatureSet fuse_features(const FeatureSet& a, const FeatureSet& b,
                         const FeatureStats& stats_a,
                         const FeatureStats& stats_b, bool standardize_halves) {
  a.validate();
  b.validate();
  if (a.n != b.n || a.labels != b.labels) {
    throw DataError("fuse_features: rows are not aligned");
  }
  FeatureSet left_std, right_std;
  const FeatureSet* left = &a;
  const FeatureSet* right = &b;
  if (standardize_halves) {
    left_std = standardize(a, stats_a);
    right_std = standardize(b, stats_b);
    left = &left_std;
    right = &right_std;
  }

  FeatureSet fused;
  fused.n = a.n;
  fused.d = a.d + b.d;
  fused.labels = a.labels;
  fused.source = "fused";
  fused.provenance = a.provenance;
  fused.features.resize(static_cast<size_t>(fused.n) * fused.d);
  for (int i = 0; i < fused.n; ++i) {
    auto* dst = fused.features.data() + static_cast<size_t>(i) * fused.d;
    std::copy_n(left->row(i).data(), a.d, dst);
    std::copy_n(right->row(i).data(), b.d, dst + a.d);
  }
  return fused;
}

void save_features(const std::filesystem::path& path, const FeatureSet& set) {
  set.validate();
  nlohmann::ordered_json header;
  header["format_version"] = kFormatVersion;
  header["n"] = set.n;
  header["d"] = set.d;
  header["source"] = set.source;
  header["provenance"] = set.provenance;
  header["labels"] = set.labels;
  envelope::write(path, header, set.features);
}

FeatureSet load_features(const std::filesystem::path& path) {
  envelope::Contents contents = envelope::read(path);
  FeatureSet set;
  int version = -1;
  try {
    version = contents.header.at("format_version").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(path.string() + ": header lacks format_version");
  }
  if (version != kFormatVersion) {
    throw VersionError(path.string() + ": unsupported format_version " +
                       std::to_string(version));
  }
  try {
    set.n = contents.header.at("n").get<int>();
    set.d = contents.header.at("d").get<int>();
    set.source = contents.header.at("source").get<std::string>();
    set.provenance = contents.header.at("provenance").get<std::string>();
    set.labels = contents.header.at("labels").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed header: " + e.what());
  }
  const size_t expected = static_cast<size_t>(set.n) * set.d * 4;
  if (contents.payload.size() < expected) {
    throw TruncatedError(path.string() + ": payload holds " +
                         std::to_string(contents.payload.size()) +
                         " bytes, header declares " + std::to_string(expected));
  }
  if (!contents.crc_ok) {
    throw ChecksumError(path.string() + ": CRC-64 mismatch");
  }
  set.features = envelope::decode_floats(contents.payload, 0, expected);
  set.validate();
  return set;
}

}  // namespace scn
