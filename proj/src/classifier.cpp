#include "scn/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace scn {

std::vector<float> LinearClassifier::scores(std::span<const float> x) const {
  if (x.size() != static_cast<size_t>(d)) {
    throw DimensionError("classifier: feature dimension mismatch");
  }
  std::vector<float> out(classes.size());
  for (size_t c = 0; c < classes.size(); ++c) {
    const float* w = weights.data() + c * static_cast<size_t>(d);
    double acc = biases[c];
    for (int j = 0; j < d; ++j) acc += double(w[j]) * double(x[static_cast<size_t>(j)]);
    out[c] = static_cast<float>(acc);
  }
  return out;
}

int LinearClassifier::predict(std::span<const float> x) const {
  const auto s = scores(x);
  size_t best = 0;
  for (size_t c = 1; c < s.size(); ++c) {
    if (s[c] > s[best]) best = c;  // ties keep the lowest class id
  }
  return classes[best];
}

LinearClassifier train_linear_classifier(const FeatureSet& train, float reg,
                                         int epochs, uint64_t seed) {
  (void)seed;  // the objective is convex and solved deterministically
  train.validate();
  if (reg < 0.0f) throw ConfigError("classifier: reg must be nonnegative");
  if (epochs <= 0) throw ConfigError("classifier: epochs must be positive");

  const std::set<int> class_set(train.labels.begin(), train.labels.end());
  if (class_set.size() < 2) {
    throw UsageError("classifier: need at least two classes in training data");
  }

  LinearClassifier clf;
  clf.classes.assign(class_set.begin(), class_set.end());
  clf.d = train.d;
  clf.reg = reg;
  clf.trained_on = train.provenance;
  const int n_classes = clf.num_classes();
  const int n = train.n;
  const int d = train.d;

  // Canonical row order: by label, then lexicographically by feature values.
  // Makes the accumulation below bitwise invariant to input permutation.
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (train.labels[static_cast<size_t>(a)] != train.labels[static_cast<size_t>(b)]) {
      return train.labels[static_cast<size_t>(a)] < train.labels[static_cast<size_t>(b)];
    }
    const auto ra = train.row(a), rb = train.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(),
                                        rb.end());
  });

  // Step size bounded by the squared-hinge curvature, 2/N * sum ||x||^2.
  double mean_sq = 1.0;  // bias column
  for (int i = 0; i < n; ++i) {
    for (float v : train.row(i)) mean_sq += double(v) * double(v) / n;
  }
  const float lr = static_cast<float>(0.5 / mean_sq);

  clf.weights.assign(static_cast<size_t>(n_classes) * d, 0.0f);
  clf.biases.assign(static_cast<size_t>(n_classes), 0.0f);

  std::vector<double> grad_w(static_cast<size_t>(d));
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (int c = 0; c < n_classes; ++c) {
      float* w = clf.weights.data() + static_cast<size_t>(c) * d;
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      double grad_b = 0.0;
      for (int rank = 0; rank < n; ++rank) {
        const int i = order[static_cast<size_t>(rank)];
        const auto x = train.row(i);
        const float y =
            train.labels[static_cast<size_t>(i)] == clf.classes[static_cast<size_t>(c)]
                ? 1.0f
                : -1.0f;
        double s = clf.biases[static_cast<size_t>(c)];
        for (int j = 0; j < d; ++j) s += double(w[j]) * double(x[static_cast<size_t>(j)]);
        const double margin = 1.0 - y * s;
        if (margin <= 0.0) continue;
        const double coeff = -2.0 * y * margin / n;
        for (int j = 0; j < d; ++j) grad_w[static_cast<size_t>(j)] += coeff * x[static_cast<size_t>(j)];
        grad_b += coeff;
      }
      for (int j = 0; j < d; ++j) {
        const double g = grad_w[static_cast<size_t>(j)] + 2.0 * reg * w[j];
        w[j] = static_cast<float>(w[j] - lr * g);
      }
      clf.biases[static_cast<size_t>(c)] =
          static_cast<float>(clf.biases[static_cast<size_t>(c)] - lr * grad_b);
    }
  }
  return clf;
}

double accuracy(const LinearClassifier& clf, const FeatureSet& test) {
  test.validate();
  if (test.n == 0) throw UsageError("accuracy: empty feature set");
  int correct = 0;
  for (int i = 0; i < test.n; ++i) {
    if (clf.predict(test.row(i)) == test.labels[static_cast<size_t>(i)]) ++correct;
  }
  return double(correct) / test.n;
}

double average_precision(const std::vector<float>& scores,
                         const std::vector<uint8_t>& relevant) {
  if (scores.size() != relevant.size() || scores.empty()) {
    throw UsageError("average_precision: scores/relevance must align");
  }
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
  });
  double hits = 0.0, ap = 0.0;
  for (size_t rank = 0; rank < order.size(); ++rank) {
    if (relevant[static_cast<size_t>(order[rank])]) {
      hits += 1.0;
      ap += hits / double(rank + 1);
    }
  }
  return hits > 0.0 ? ap / hits : 0.0;
}

double map_score(const LinearClassifier& clf, const FeatureSet& test) {
  test.validate();
  if (test.n == 0) throw UsageError("map_score: empty feature set");
  std::vector<std::vector<float>> all_scores(
      static_cast<size_t>(clf.num_classes()),
      std::vector<float>(static_cast<size_t>(test.n)));
  for (int i = 0; i < test.n; ++i) {
    const auto s = clf.scores(test.row(i));
    for (size_t c = 0; c < s.size(); ++c) all_scores[c][static_cast<size_t>(i)] = s[c];
  }
  double sum = 0.0;
  int counted = 0;
  for (size_t c = 0; c < all_scores.size(); ++c) {
    std::vector<uint8_t> relevant(static_cast<size_t>(test.n));
    int positives = 0;
    for (int i = 0; i < test.n; ++i) {
      relevant[static_cast<size_t>(i)] =
          test.labels[static_cast<size_t>(i)] == clf.classes[c] ? 1 : 0;
      positives += relevant[static_cast<size_t>(i)];
    }
    if (positives == 0) continue;  // class absent from this split
    sum += average_precision(all_scores[c], relevant);
    ++counted;
  }
  if (counted == 0) throw UsageError("map_score: no class has positives");
  return sum / counted;
}

}  // namespace scn
