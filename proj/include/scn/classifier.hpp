#pragma once

#include <cstdint>
#include <vector>

#include "scn/features.hpp"

namespace scn {

/// One-vs-rest linear classifier trained on an L2-regularized squared hinge.
struct LinearClassifier {
  std::vector<int> classes;    // sorted distinct training labels
  int d = 0;
  std::vector<float> weights;  // C x D, row-major
  std::vector<float> biases;   // C
  float reg = 1e-4f;
  std::string trained_on;

  int num_classes() const { return static_cast<int>(classes.size()); }

  /// Per-class decision values for one feature row.
  std::vector<float> scores(std::span<const float> x) const;

  /// argmax class; ties resolve to the lowest class id.
  int predict(std::span<const float> x) const;
};

/// Trains by full-batch gradient descent on the one-vs-rest squared hinge
/// with L2 regularization (the loss is convex, so this is deterministic and
/// order-independent; rows are canonically pre-sorted before accumulation so
/// the result is also invariant to input permutation). Requires at least two
/// classes.
LinearClassifier train_linear_classifier(const FeatureSet& train,
                                         float reg = 1e-4f, int epochs = 100,
                                         uint64_t seed = 1);

/// Fraction of rows whose predicted class matches the label.
double accuracy(const LinearClassifier& clf, const FeatureSet& test);

/// Average precision of one ranking: mean over positives of the precision at
/// that rank, with ties broken by original order (stable sort on scores).
double average_precision(const std::vector<float>& scores,
                         const std::vector<uint8_t>& relevant);

/// Mean over classes (with at least one positive in `test`) of the AP of the
/// class's one-vs-rest score ranking.
double map_score(const LinearClassifier& clf, const FeatureSet& test);

}  // namespace scn
