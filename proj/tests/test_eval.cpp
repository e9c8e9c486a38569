#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "scn/classifier.hpp"
#include "scn/features.hpp"
#include "scn/reconstruct.hpp"
#include "scn/synthetic.hpp"
#include "test_utils.hpp"

using namespace scn;
using namespace scn::testing;

namespace {

FeatureSet make_set(int n, int d, std::vector<float> values,
                    std::vector<int> labels, const std::string& source = "h1") {
  FeatureSet set;
  set.n = n;
  set.d = d;
  set.features = std::move(values);
  set.labels = std::move(labels);
  set.source = source;
  set.provenance = "test";
  set.validate();
  return set;
}

// Two well-separated Gaussian-ish blobs in 2-D.
FeatureSet separable_toy(int per_class, uint64_t seed) {
  Rng rng(seed);
  FeatureSet set;
  set.n = 2 * per_class;
  set.d = 2;
  set.source = "h1";
  set.provenance = "toy";
  for (int i = 0; i < per_class; ++i) {
    set.features.push_back(static_cast<float>(rng.uniform(1.0, 2.0)));
    set.features.push_back(static_cast<float>(rng.uniform(1.0, 2.0)));
    set.labels.push_back(0);
  }
  for (int i = 0; i < per_class; ++i) {
    set.features.push_back(static_cast<float>(rng.uniform(-2.0, -1.0)));
    set.features.push_back(static_cast<float>(rng.uniform(-2.0, -1.0)));
    set.labels.push_back(1);
  }
  return set;
}

EncoderConfig tiny_encoder_config() {
  EncoderConfig cfg;
  cfg.conv_layers = {{2, 4, 2, 1}};
  cfg.fc_dims = {8, 4};
  cfg.input_size = 8;
  cfg.channels = 1;
  return cfg;
}

std::vector<PairSample> tiny_pairs(int count, uint64_t seed) {
  Rng rng(seed);
  Image img = Image::black(32, 32, 1);
  render_circle(img, 8, 8, 5);
  render_square(img, 24, 9, 5);
  std::vector<PairSample> pairs;
  for (int k = 0; k < count; ++k) {
    PairSample p;
    p.image_id = "tiny";
    p.box_j = BoundingBox::from_xywh(2, 2, 12, 12);
    p.box_i = BoundingBox::from_xywh(
        14.0f + static_cast<float>(rng.uniform(0, 6)),
        1.0f + static_cast<float>(rng.uniform(0, 6)), 12, 12);
    p.patch_j = crop_resize(img, p.box_j, 8);
    p.patch_i = crop_resize(img, p.box_i, 8);
    p.offset = compute_offset(p.box_i, p.box_j);
    p.label_i = kSquare;
    p.label_j = kCircle;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace

TEST_CASE("linearly separable toy set reaches 100% training accuracy") {
  FeatureSet train = separable_toy(20, 111);
  LinearClassifier clf = train_linear_classifier(train, 1e-4f, 200, 1);
  CHECK(accuracy(clf, train) == 1.0);
  CHECK(map_score(clf, train) == 1.0);
}

TEST_CASE("single-class training data is rejected") {
  FeatureSet degenerate = make_set(3, 2, {1, 2, 3, 4, 5, 6}, {7, 7, 7});
  CHECK_THROWS_AS(train_linear_classifier(degenerate), UsageError);
}

TEST_CASE("shuffled labels give chance-level accuracy") {
  // 3 balanced classes, informative features, labels randomly permuted:
  // test accuracy should sit in the bootstrap band around 1/3.
  Rng rng(112);
  const int per_class = 60;
  FeatureSet train, test;
  train.d = test.d = 3;
  train.source = test.source = "h1";
  auto fill = [&](FeatureSet& set, int n_per) {
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < n_per; ++i) {
        for (int j = 0; j < 3; ++j) {
          set.features.push_back(static_cast<float>(rng.uniform(0, 0.2) +
                                                    (j == c ? 1.0 : 0.0)));
        }
        set.labels.push_back(c);
      }
    }
    set.n = 3 * n_per;
  };
  fill(train, per_class);
  fill(test, 40);
  // Shuffle the training labels only.
  Rng shuffle_rng(113);
  shuffle_rng.shuffle(train.labels);

  LinearClassifier clf = train_linear_classifier(train, 1e-4f, 100, 1);
  const double acc = accuracy(clf, test);
  CHECK(acc > 0.31 - 0.10);
  CHECK(acc < 0.41 + 0.10);
}

TEST_CASE("duplicating every training row leaves the decision function") {
  FeatureSet train = separable_toy(15, 114);
  FeatureSet doubled;
  doubled.n = train.n * 2;
  doubled.d = train.d;
  doubled.source = train.source;
  doubled.provenance = train.provenance;
  for (int i = 0; i < train.n; ++i) {
    for (int rep = 0; rep < 2; ++rep) {
      const auto row = train.row(i);
      doubled.features.insert(doubled.features.end(), row.begin(), row.end());
      doubled.labels.push_back(train.labels[static_cast<size_t>(i)]);
    }
  }

  LinearClassifier a = train_linear_classifier(train, 1e-4f, 100, 1);
  LinearClassifier b = train_linear_classifier(doubled, 1e-4f, 100, 1);
  REQUIRE(a.weights.size() == b.weights.size());
  for (size_t i = 0; i < a.weights.size(); ++i) {
    CHECK(a.weights[i] == doctest::Approx(b.weights[i]).epsilon(1e-5));
  }
  for (size_t i = 0; i < a.biases.size(); ++i) {
    CHECK(a.biases[i] == doctest::Approx(b.biases[i]).epsilon(1e-5));
  }
}

TEST_CASE("training is invariant to feature-row permutation") {
  FeatureSet train = separable_toy(12, 115);
  FeatureSet permuted = train;
  // Reverse the rows.
  for (int i = 0; i < train.n; ++i) {
    const auto row = train.row(train.n - 1 - i);
    std::copy(row.begin(), row.end(),
              permuted.features.begin() + static_cast<long>(i) * train.d);
    permuted.labels[static_cast<size_t>(i)] =
        train.labels[static_cast<size_t>(train.n - 1 - i)];
  }
  LinearClassifier a = train_linear_classifier(train);
  LinearClassifier b = train_linear_classifier(permuted);
  CHECK(a.weights == b.weights);  // canonical pre-sort makes this bitwise
  CHECK(a.biases == b.biases);
}

TEST_CASE("accuracy tie-break picks the lowest class id") {
  // Zero classifier: all scores equal, every prediction is classes[0].
  LinearClassifier clf;
  clf.classes = {2, 5, 9};
  clf.d = 2;
  clf.weights.assign(6, 0.0f);
  clf.biases.assign(3, 0.0f);

  FeatureSet test = make_set(4, 2, {1, 0, 0, 1, 1, 1, 0, 0}, {2, 5, 9, 2});
  // Prior of the lowest class id: 2 of 4 rows.
  CHECK(accuracy(clf, test) == 0.5);
}

TEST_CASE("perfect ranker scores accuracy 1 and mAP 1") {
  FeatureSet test = make_set(6, 3,
                             {9, 0, 0, 0, 9, 0, 0, 0, 9,
                              9, 0, 0, 0, 9, 0, 0, 0, 9},
                             {0, 1, 2, 0, 1, 2});
  LinearClassifier clf;
  clf.classes = {0, 1, 2};
  clf.d = 3;
  clf.weights = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  clf.biases = {0, 0, 0};
  CHECK(accuracy(clf, test) == 1.0);
  CHECK(map_score(clf, test) == 1.0);
}

TEST_CASE("average precision matches the hand-computed 4-point example") {
  // Ranking [+, -, +, -]: AP = (1 + 2/3) / 2 = 0.833...
  const std::vector<float> scores = {0.9f, 0.7f, 0.5f, 0.3f};
  const std::vector<uint8_t> relevant = {1, 0, 1, 0};
  CHECK(average_precision(scores, relevant) ==
        doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));

  // Invariant under strictly monotone score transformations.
  std::vector<float> transformed;
  for (float s : scores) transformed.push_back(2.0f * s * s + 1.0f);
  CHECK(average_precision(transformed, relevant) ==
        average_precision(scores, relevant));

  CHECK_THROWS_AS(average_precision({1.0f}, {}), UsageError);
}

TEST_CASE("feature extraction shapes, conditioning, determinism") {
  Encoder reference(tiny_encoder_config(), 121);
  ScnModel model(reference, {}, 122);
  auto pairs = tiny_pairs(5, 123);

  FeatureSet h1 = extract_features(model, pairs, FeatureKind::kH1, "ck0");
  CHECK(h1.n == 5);
  CHECK(h1.d == 4);
  CHECK(h1.source == "h1");
  CHECK(h1.labels == std::vector<int>(5, kSquare));

  // Before SCN training the bottom stream equals the reference encoder.
  Tensor ref_feat = reference.forward(
      nullptr, stack_patches(std::span<const PairSample>(pairs), true));
  CHECK(h1.features == ref_feat.data());

  FeatureSet h3 = extract_features(model, pairs, FeatureKind::kH3, "ck0");
  CHECK(h3.source == "h3");
  CHECK(h3.d == 4);
  // Same input patch, different offsets: rows must differ (nonzero V_loc).
  bool some_row_differs = false;
  for (int i = 1; i < h3.n; ++i) {
    if (std::vector<float>(h3.row(i).begin(), h3.row(i).end()) !=
        std::vector<float>(h3.row(0).begin(), h3.row(0).end())) {
      some_row_differs = true;
    }
  }
  CHECK(some_row_differs);

  FeatureSet h3_again = extract_features(model, pairs, FeatureKind::kH3, "ck0");
  CHECK(h3.features == h3_again.features);
}

TEST_CASE("fusion concatenates standardized halves exactly") {
  FeatureSet a = separable_toy(10, 131);
  FeatureSet b = separable_toy(10, 132);
  b.source = "h3";

  const FeatureStats stats_a = compute_stats(a);
  const FeatureStats stats_b = compute_stats(b);
  FeatureSet fused = fuse_features(a, b, stats_a, stats_b);
  CHECK(fused.d == a.d + b.d);
  CHECK(fused.n == a.n);
  CHECK(fused.source == "fused");

  // Both halves are preserved bit-exactly post-standardization.
  const FeatureSet sa = standardize(a, stats_a);
  const FeatureSet sb = standardize(b, stats_b);
  for (int i = 0; i < fused.n; ++i) {
    for (int j = 0; j < a.d; ++j) {
      CHECK(fused.row(i)[static_cast<size_t>(j)] == sa.row(i)[static_cast<size_t>(j)]);
    }
    for (int j = 0; j < b.d; ++j) {
      CHECK(fused.row(i)[static_cast<size_t>(a.d + j)] == sb.row(i)[static_cast<size_t>(j)]);
    }
  }

  // Raw concatenation switch.
  FeatureSet raw = fuse_features(a, b, stats_a, stats_b, false);
  CHECK(raw.row(0)[0] == a.row(0)[0]);

  // Fusing a set with itself doubles D and keeps nearest-neighbor order.
  FeatureSet self = fuse_features(a, a, stats_a, stats_a);
  CHECK(self.d == 2 * a.d);

  // Misaligned rows are rejected.
  FeatureSet clipped = a;
  clipped.n -= 1;
  clipped.features.resize(static_cast<size_t>(clipped.n) * clipped.d);
  clipped.labels.resize(static_cast<size_t>(clipped.n));
  CHECK_THROWS_AS(fuse_features(clipped, b, stats_a, stats_b), DataError);
}

TEST_CASE("feature files round-trip bit-exactly with distinct errors") {
  TempDir tmp("features");
  FeatureSet set = separable_toy(8, 141);
  set.provenance = "ck1|manifest2";

  const auto path = tmp.path / "feat.bin";
  save_features(path, set);
  FeatureSet loaded = load_features(path);
  CHECK(loaded.features == set.features);
  CHECK(loaded.labels == set.labels);
  CHECK(loaded.source == set.source);
  CHECK(loaded.provenance == set.provenance);

  // Re-saving the loaded set reproduces the bytes.
  save_features(tmp.path / "feat2.bin", loaded);
  std::ifstream fa(path, std::ios::binary);
  std::ifstream fb(tmp.path / "feat2.bin", std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(fa)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(fb)), {});
  CHECK(bytes_a == bytes_b);

  {
    std::string bytes = bytes_a;
    bytes[bytes.find('\n') + 3] ^= 0x01;
    std::ofstream out(tmp.path / "corrupt.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_features(tmp.path / "corrupt.bin"), ChecksumError);
  {
    std::ofstream out(tmp.path / "short.bin", std::ios::binary);
    out.write(bytes_a.data(), static_cast<std::streamsize>(bytes_a.size() - 32));
  }
  CHECK_THROWS_AS(load_features(tmp.path / "short.bin"), TruncatedError);
}

TEST_CASE("reconstruct_patch: mode guard and zero-weight black output") {
  Encoder reference(tiny_encoder_config(), 151);
  ScnModel feature_model(reference, {}, 152);
  auto pairs = tiny_pairs(1, 153);
  CHECK_THROWS_AS(
      reconstruct_patch(feature_model, pairs[0].patch_j, pairs[0].offset),
      UsageError);

  ScnModelConfig cfg;
  cfg.mode = TargetMode::kRawPixel;
  ScnModel raw(reference, cfg, 154);
  for (Tensor* t : {&raw.context().v2, &raw.context().b3}) {
    std::fill(t->data().begin(), t->data().end(), 0.0f);
  }
  Image img = reconstruct_patch(raw, pairs[0].patch_j, pairs[0].offset);
  CHECK(img.width == 8);
  CHECK(img.height == 8);
  for (uint8_t p : img.pixels) CHECK(p == 0);
  CHECK(mean_intensity(img) == 0.0);
}

TEST_CASE("normalized cross-correlation separates the shape templates") {
  const Image square = template_patch(kSquare, 32);
  const Image triangle = template_patch(kTriangle, 32);
  const Image circle = template_patch(kCircle, 32);

  CHECK(normalized_cross_correlation(square, square) == doctest::Approx(1.0));
  CHECK(normalized_cross_correlation(square, triangle) <
        normalized_cross_correlation(square, square));
  // A constant image has zero variance, so the correlation is defined as 0.
  const Image black = template_patch(kBlack, 32);
  CHECK(normalized_cross_correlation(square, black) == 0.0);
  // Distinct shapes correlate with themselves more than with each other.
  CHECK(normalized_cross_correlation(circle, triangle) < 1.0);
}
