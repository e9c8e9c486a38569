#include "scn/train.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "scn/rng.hpp"

namespace scn {

namespace {

Tensor gather_rows(const Tensor& src, std::span<const int> rows) {
  Shape shape = src.shape();
  shape[0] = static_cast<int>(rows.size());
  const size_t stride = static_cast<size_t>(src.numel() / src.dim(0));
  Tensor out = Tensor::zeros(shape);
  for (size_t n = 0; n < rows.size(); ++n) {
    const auto* src_row = src.data().data() + stride * rows[n];
    std::copy_n(src_row, stride, out.data().begin() + static_cast<long>(n * stride));
  }
  return out;
}

// Frozen regression targets for a pair list, computed once up front.
Tensor build_targets(ScnModel& model, std::span<const PairSample> pairs,
                     int batch_size) {
  Tensor all_i = stack_patches(pairs, /*target_side=*/true);
  if (model.mode() == TargetMode::kRawPixel) {
    return flatten_rows(nullptr, all_i);
  }
  const int n = all_i.dim(0);
  Tensor targets = Tensor::zeros({n, model.target_dim()});
  const size_t dim = static_cast<size_t>(model.target_dim());
  for (int start = 0; start < n; start += batch_size) {
    const int count = std::min(batch_size, n - start);
    std::vector<int> rows(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) rows[static_cast<size_t>(k)] = start + k;
    Tensor part = model.encode_batch(nullptr, gather_rows(all_i, rows),
                                     ScnModel::Stream::kTop);
    std::copy(part.data().begin(), part.data().end(),
              targets.data().begin() + static_cast<long>(start * dim));
  }
  return targets;
}

struct Cached {
  Tensor inputs;   // [N x C x S x S]
  Tensor offsets;  // [N x 8]
  Tensor targets;  // [N x Dtar]
};

Cached cache_pairs(ScnModel& model, std::span<const PairSample> pairs,
                   int batch_size) {
  Cached c;
  c.inputs = stack_patches(pairs, /*target_side=*/false);
  c.offsets = stack_offsets(pairs);
  c.targets = build_targets(model, pairs, batch_size);
  return c;
}

float cached_mse(ScnModel& model, const Cached& c, int batch_size) {
  const int n = c.inputs.dim(0);
  double sq_sum = 0.0;
  for (int start = 0; start < n; start += batch_size) {
    const int count = std::min(batch_size, n - start);
    std::vector<int> rows(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) rows[static_cast<size_t>(k)] = start + k;
    Tensor h1 = model.encode_batch(nullptr, gather_rows(c.inputs, rows),
                                   ScnModel::Stream::kBottom);
    Tensor h3 = model.context_forward(nullptr, h1, gather_rows(c.offsets, rows));
    const auto& pd = h3.data();
    const float* td = c.targets.data().data() +
                      static_cast<size_t>(start) * model.target_dim();
    for (size_t k = 0; k < pd.size(); ++k) {
      const double d = double(pd[k]) - double(td[k]);
      sq_sum += d * d;
    }
  }
  return static_cast<float>(sq_sum / n);
}

}  // namespace

float evaluate_mse(ScnModel& model, std::span<const PairSample> pairs,
                   int batch_size) {
  if (pairs.empty()) throw UsageError("evaluate_mse: empty pair list");
  return cached_mse(model, cache_pairs(model, pairs, batch_size), batch_size);
}

TrainingReport train(ScnModel& model, std::span<const PairSample> train_pairs,
                     std::span<const PairSample> test_pairs,
                     const SgdConfig& config, bool eval_each_epoch,
                     const std::function<void(const EpochStats&)>& on_epoch) {
  config.validate();
  if (train_pairs.empty()) throw UsageError("train: empty training set");

  const Cached train_cache = cache_pairs(model, train_pairs, config.batch_size);
  std::optional<Cached> test_cache;
  if (!test_pairs.empty()) {
    test_cache = cache_pairs(model, test_pairs, config.batch_size);
  }

  std::vector<Tensor> params = model.trainable_parameters();
  Sgd optimizer(config);
  const int n = static_cast<int>(train_pairs.size());

  std::vector<int> order(static_cast<size_t>(n));
  std::vector<double> sample_sq(static_cast<size_t>(n));
  TrainingReport report;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng(derive_seed(config.seed,
                        "train/shuffle/epoch." + std::to_string(epoch)));
    rng.shuffle(order);

    Tape tape;
    for (int start = 0, batch_idx = 0; start < n;
         start += config.batch_size, ++batch_idx) {
      const int count = std::min(config.batch_size, n - start);
      const std::span<const int> rows(order.data() + start,
                                      static_cast<size_t>(count));
      Tensor h1 = model.encode_batch(&tape, gather_rows(train_cache.inputs, rows),
                                     ScnModel::Stream::kBottom);
      Tensor h3 = model.context_forward(&tape, h1,
                                        gather_rows(train_cache.offsets, rows));
      Tensor targets = gather_rows(train_cache.targets, rows);
      Tensor loss = mse_loss(&tape, h3, targets);
      if (!std::isfinite(loss.item())) {
        throw NumericError("train: non-finite loss at epoch " +
                           std::to_string(epoch) + " batch " +
                           std::to_string(batch_idx));
      }
      // Per-sample squared errors, re-summed in sample order below so the
      // reported epoch loss does not depend on the batch partition.
      const int dim = h3.dim(1);
      for (int r = 0; r < count; ++r) {
        double sq = 0.0;
        for (int jd = 0; jd < dim; ++jd) {
          const size_t idx = static_cast<size_t>(r) * dim + jd;
          const double diff = double(h3.data()[idx]) - double(targets.data()[idx]);
          sq += diff * diff;
        }
        sample_sq[static_cast<size_t>(rows[static_cast<size_t>(r)])] = sq;
      }
      tape.backward(loss);
      optimizer.step(params, epoch);
      optimizer.zero_grad(params);
      tape.reset();
    }

    double loss_sum = 0.0;
    for (double sq : sample_sq) loss_sum += sq;

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_mse = static_cast<float>(loss_sum / n);
    if (test_cache && (eval_each_epoch || epoch + 1 == config.max_epochs)) {
      stats.test_mse = cached_mse(model, *test_cache, config.batch_size);
    }
    report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return report;
}

Encoder pretrain_reference_encoder(const std::vector<Tensor>& patches,
                                   const std::vector<int>& labels,
                                   const EncoderConfig& encoder_config,
                                   const SgdConfig& sgd_config, uint64_t seed) {
  sgd_config.validate();
  if (patches.empty() || patches.size() != labels.size()) {
    throw UsageError("pretrain: patches and labels must align and be nonempty");
  }
  std::set<int> class_set(labels.begin(), labels.end());
  if (class_set.size() < 2) {
    throw UsageError("pretrain: need at least two classes");
  }
  const std::vector<int> classes(class_set.begin(), class_set.end());
  const int n_classes = static_cast<int>(classes.size());
  const int n = static_cast<int>(patches.size());

  // One-hot targets under the squared loss; the head is discarded at the end.
  Tensor targets = Tensor::zeros({n, n_classes});
  for (int i = 0; i < n; ++i) {
    const auto cls = std::find(classes.begin(), classes.end(), labels[static_cast<size_t>(i)]);
    targets.data()[static_cast<size_t>(i) * n_classes +
                   static_cast<size_t>(cls - classes.begin())] = 1.0f;
  }

  Encoder encoder(encoder_config, derive_seed(seed, "pretrain/encoder"));
  Tensor head_w = init_weights({n_classes, encoder_config.feature_dim()},
                               InitScheme::kUniformFanBalanced,
                               derive_seed(seed, "pretrain/head"), true);
  Tensor head_b = init_weights({n_classes}, InitScheme::kZeros, 0, true);

  Tensor inputs = Tensor::zeros({n, encoder_config.channels,
                                 encoder_config.input_size,
                                 encoder_config.input_size});
  const size_t stride = static_cast<size_t>(inputs.numel() / n);
  for (int i = 0; i < n; ++i) {
    const auto& p = patches[static_cast<size_t>(i)];
    if (p.data().size() != stride) {
      throw DimensionError("pretrain: patch does not match the encoder input");
    }
    std::copy(p.data().begin(), p.data().end(),
              inputs.data().begin() + static_cast<long>(i * stride));
  }

  std::vector<Tensor> params = encoder.parameters();
  params.push_back(head_w);
  params.push_back(head_b);
  Sgd optimizer(sgd_config);

  std::vector<int> order(static_cast<size_t>(n));
  Tape tape;
  for (int epoch = 0; epoch < sgd_config.max_epochs; ++epoch) {
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng(derive_seed(seed, "pretrain/shuffle/epoch." + std::to_string(epoch)));
    rng.shuffle(order);
    for (int start = 0, batch_idx = 0; start < n;
         start += sgd_config.batch_size, ++batch_idx) {
      const int count = std::min(sgd_config.batch_size, n - start);
      const std::span<const int> rows(order.data() + start,
                                      static_cast<size_t>(count));
      Tensor feats = encoder.forward(&tape, gather_rows(inputs, rows));
      Tensor logits = fully_connected(&tape, feats, head_w, head_b);
      Tensor loss = mse_loss(&tape, logits, gather_rows(targets, rows));
      if (!std::isfinite(loss.item())) {
        throw NumericError("pretrain: non-finite loss at epoch " +
                           std::to_string(epoch) + " batch " +
                           std::to_string(batch_idx));
      }
      tape.backward(loss);
      optimizer.step(params, epoch);
      optimizer.zero_grad(params);
      tape.reset();
    }
  }
  return encoder;
}

}  // namespace scn
