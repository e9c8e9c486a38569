#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "scn/ops.hpp"
#include "scn/rng.hpp"
#include "scn/sgd.hpp"
#include "test_utils.hpp"

using namespace scn;
using namespace scn::testing;

TEST_CASE("tensor basics and invariants") {
  Tensor t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.at2(1, 2) == 6.0f);
  CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor::zeros({0}), DimensionError);
  CHECK_THROWS_AS(t.item(), UsageError);

  Tensor copy = t;
  CHECK(copy.shares_storage(t));
  Tensor deep = t.clone();
  CHECK(!deep.shares_storage(t));
  CHECK(deep.data() == t.data());

  Tensor bad = Tensor::from_data({2}, {1.0f, INFINITY});
  CHECK_THROWS_AS(bad.check_finite("bad"), NumericError);
  Tensor fine = Tensor::from_data({2}, {1.0f, -2.0f});
  CHECK_NOTHROW(fine.check_finite("fine"));
}

TEST_CASE("fully_connected forward examples") {
  Tape tape;
  // Identity map.
  Tensor x = Tensor::from_data({1, 2}, {1, 2});
  Tensor w = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  Tensor b = Tensor::zeros({2});
  Tensor out = fully_connected(&tape, x, w, b);
  CHECK(out.at2(0, 0) == 1.0f);
  CHECK(out.at2(0, 1) == 2.0f);

  // Forced arithmetic: [[1,1]] * [[2,3]]^T + [1] = [[6]].
  Tensor x2 = Tensor::from_data({1, 2}, {1, 1});
  Tensor w2 = Tensor::from_data({1, 2}, {2, 3});
  Tensor b2 = Tensor::from_data({1}, {1});
  CHECK(fully_connected(&tape, x2, w2, b2).item() == 6.0f);

  CHECK_THROWS_AS(fully_connected(&tape, x, w2, b), DimensionError);
}

TEST_CASE("fully_connected gradients match finite differences") {
  Rng rng(11);
  Tensor x = rand_tensor({3, 4}, rng, -1, 1, true);
  Tensor w = rand_tensor({5, 4}, rng, -1, 1, true);
  Tensor b = rand_tensor({5}, rng, -1, 1, true);

  auto loss_fn = [&] {
    return sum_all(nullptr, fully_connected(nullptr, x, w, b)).item();
  };
  Tape tape;
  Tensor loss = sum_all(&tape, fully_connected(&tape, x, w, b));
  tape.backward(loss);

  CHECK(max_grad_error(w, loss_fn, w.grad()) < 1e-3);
  CHECK(max_grad_error(x, loss_fn, x.grad()) < 1e-3);
  CHECK(max_grad_error(b, loss_fn, b.grad()) < 1e-3);
}

TEST_CASE("conv2d forward examples") {
  Tape tape;
  // 1x1 identity kernel leaves a 3x3 input unchanged.
  Tensor ones = Tensor::full({1, 1, 3, 3}, 1.0f);
  Tensor k1 = Tensor::full({1, 1, 1, 1}, 1.0f);
  Tensor b0 = Tensor::zeros({1});
  Tensor out = conv2d(&tape, ones, k1, b0, 1, 0);
  CHECK(out.shape() == Shape{1, 1, 3, 3});
  for (float v : out.data()) CHECK(v == 1.0f);

  // Full-window kernel of ones sums the input: 1+2+3+4 = 10.
  Tensor x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor k2 = Tensor::full({1, 1, 2, 2}, 1.0f);
  Tensor summed = conv2d(&tape, x, k2, b0, 1, 0);
  CHECK(summed.shape() == Shape{1, 1, 1, 1});
  CHECK(summed.item() == 10.0f);

  // Non-integral output size: (3 - 2) / 2 is not whole.
  CHECK_THROWS_AS(conv2d(&tape, ones, k2, b0, 2, 0), ConfigError);
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(12);
  Tensor x = rand_tensor({2, 2, 5, 5}, rng, -1, 1, true);
  Tensor k = rand_tensor({3, 2, 3, 3}, rng, -1, 1, true);
  Tensor b = rand_tensor({3}, rng, -1, 1, true);

  auto loss_fn = [&] {
    return sum_all(nullptr, conv2d(nullptr, x, k, b, 2, 1)).item();
  };
  Tape tape;
  Tensor loss = sum_all(&tape, conv2d(&tape, x, k, b, 2, 1));
  tape.backward(loss);

  CHECK(max_grad_error(k, loss_fn, k.grad()) < 1e-3);
  CHECK(max_grad_error(x, loss_fn, x.grad()) < 1e-3);
  CHECK(max_grad_error(b, loss_fn, b.grad()) < 1e-3);
}

TEST_CASE("sigmoid examples and gradient") {
  Tensor zero = Tensor::scalar(0.0f);
  CHECK(sigmoid(nullptr, zero).item() == 0.5f);

  Tensor negative = Tensor::scalar(-20.0f);
  const float v = sigmoid(nullptr, negative).item();
  CHECK(v > 0.0f);
  CHECK(v <= 1e-6f);

  // Gradient at 0 is exactly 0.25.
  Tensor x = Tensor::from_data({1, 1}, {0.0f}, true);
  Tape tape;
  Tensor loss = sum_all(&tape, sigmoid(&tape, x));
  tape.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(0.25f));
  auto loss_fn = [&] { return sum_all(nullptr, sigmoid(nullptr, x)).item(); };
  CHECK(max_grad_error(x, loss_fn, x.grad()) < 1e-3);

  // Outputs stay strictly inside (0, 1) over a wide range.
  Rng rng(13);
  Tensor wide = rand_tensor({1, 64}, rng, -30, 30);
  Tensor squashed = sigmoid(nullptr, wide);
  for (float y : squashed.data()) {
    CHECK(y > 0.0f);
    CHECK(y < 1.0f);
  }
}

TEST_CASE("relu examples and gradient mask") {
  Tensor x = Tensor::from_data({1, 3}, {-1, 0, 2});
  Tensor out = relu(nullptr, x);
  CHECK(out.data() == std::vector<float>{0, 0, 2});

  Tensor all_neg = Tensor::from_data({1, 3}, {-3, -2, -1});
  Tensor zeroed = relu(nullptr, all_neg);
  for (float v : zeroed.data()) CHECK(v == 0.0f);

  Rng rng(14);
  Tensor r = rand_tensor({2, 6}, rng, -2, 2, true);
  // Keep coordinates away from the kink so finite differences are valid.
  for (auto& v : r.data()) {
    if (std::abs(v) < 0.05f) v = 0.1f;
  }
  Tape tape;
  Tensor loss = sum_all(&tape, relu(&tape, r));
  tape.backward(loss);
  auto loss_fn = [&] { return sum_all(nullptr, relu(nullptr, r)).item(); };
  CHECK(max_grad_error(r, loss_fn, r.grad()) < 1e-3);
}

TEST_CASE("mse_loss examples, invariants, gradient") {
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  CHECK(mse_loss(nullptr, a, a.clone()).item() == 0.0f);

  Tensor pred = Tensor::from_data({1, 2}, {1, 1});
  Tensor target = Tensor::zeros({1, 2});
  CHECK(mse_loss(nullptr, pred, target).item() == 2.0f);

  Tensor wrong = Tensor::zeros({2, 1});
  CHECK_THROWS_AS(mse_loss(nullptr, pred, wrong), DimensionError);
  Tensor grad_target = Tensor::zeros({1, 2}, true);
  CHECK_THROWS_AS(mse_loss(nullptr, pred, grad_target), UsageError);

  // Nonnegative, zero only at bit equality.
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor p = rand_tensor({3, 4}, rng);
    Tensor t = rand_tensor({3, 4}, rng);
    const float loss = mse_loss(nullptr, p, t).item();
    CHECK(loss >= 0.0f);
    if (p.data() != t.data()) CHECK(loss > 0.0f);
  }

  Tensor p = rand_tensor({4, 3}, rng, -1, 1, true);
  Tensor t = rand_tensor({4, 3}, rng);
  Tape tape;
  Tensor loss = mse_loss(&tape, p, t);
  tape.backward(loss);
  // Analytic rule: 2 (pred - target) / N.
  for (size_t i = 0; i < p.data().size(); ++i) {
    CHECK(p.grad()[i] ==
          doctest::Approx(2.0f * (p.data()[i] - t.data()[i]) / 4.0f));
  }
  auto loss_fn = [&] { return mse_loss(nullptr, p, t).item(); };
  CHECK(max_grad_error(p, loss_fn, p.grad()) < 1e-3);
}

TEST_CASE("backward contract: unused parameters, double call, non-scalar") {
  Tensor x = Tensor::from_data({1, 2}, {1, 2}, true);
  Tensor w = Tensor::from_data({2, 2}, {1, 0, 0, 1}, true);
  Tensor unused = Tensor::from_data({2, 2}, {9, 9, 9, 9}, true);
  Tensor b = Tensor::zeros({2}, true);

  Tape tape;
  Tensor out = fully_connected(&tape, x, w, b);
  Tensor loss = sum_all(&tape, out);
  CHECK_THROWS_AS(tape.backward(out), UsageError);  // non-scalar
  tape.backward(loss);

  // A parameter the loss does not depend on keeps an exactly zero gradient.
  for (float g : unused.grad()) CHECK(g == 0.0f);
  CHECK(w.grad()[0] != 0.0f);

  // Second backward without reset is an error.
  CHECK_THROWS_AS(tape.backward(loss), UsageError);
  tape.reset();
  CHECK(tape.num_ops() == 0);
}

TEST_CASE("composite net gradients: conv-relu-fc-sigmoid-mse") {
  Rng rng(16);
  Tensor x = rand_tensor({2, 1, 6, 6}, rng, 0, 1, true);
  Tensor k = rand_tensor({2, 1, 3, 3}, rng, -0.5, 0.5, true);
  Tensor kb = rand_tensor({2}, rng, -0.1, 0.1, true);
  Tensor w = rand_tensor({3, 32}, rng, -0.5, 0.5, true);
  Tensor wb = rand_tensor({3}, rng, -0.1, 0.1, true);
  Tensor target = rand_tensor({2, 3}, rng, 0, 1);

  auto forward = [&](Tape* tape) {
    Tensor h = conv2d(tape, x, k, kb, 1, 0);
    h = relu(tape, h);
    h = flatten_rows(tape, h);
    h = fully_connected(tape, h, w, wb);
    h = sigmoid(tape, h);
    return mse_loss(tape, h, target);
  };

  Tape tape;
  Tensor loss = forward(&tape);
  tape.backward(loss);
  auto loss_fn = [&] { return forward(nullptr).item(); };

  CHECK(max_grad_error(x, loss_fn, x.grad()) < 1e-3);
  CHECK(max_grad_error(k, loss_fn, k.grad()) < 1e-3);
  CHECK(max_grad_error(kb, loss_fn, kb.grad()) < 1e-3);
  CHECK(max_grad_error(w, loss_fn, w.grad()) < 1e-3);
  CHECK(max_grad_error(wb, loss_fn, wb.grad()) < 1e-3);
}

TEST_CASE("sgd_step examples") {
  SgdConfig config;
  config.base_lr = 0.1f;
  config.dropped_lr = 0.01f;
  config.weight_decay = 0.0f;
  Sgd sgd(config);

  Tensor w = Tensor::from_data({1}, {1.0f}, true);
  w.grad()[0] = 0.5f;
  std::vector<Tensor> params{w};
  sgd.step(params, 0);
  CHECK(w.data()[0] == doctest::Approx(0.95f));

  // Zero gradient, zero decay: unchanged.
  sgd.zero_grad(params);
  sgd.step(params, 0);
  CHECK(w.data()[0] == doctest::Approx(0.95f));
}

TEST_CASE("learning rate drops at the configured epoch") {
  const SgdConfig config;  // paper defaults
  CHECK(config.base_lr == 1e-3f);
  CHECK(config.weight_decay == 5e-4f);
  CHECK(config.batch_size == 64);
  CHECK(config.max_epochs == 200);
  CHECK(config.learning_rate(0) == 1e-3f);
  CHECK(config.learning_rate(99) == 1e-3f);
  CHECK(config.learning_rate(100) == 1e-4f);
  CHECK(config.learning_rate(150) == 1e-4f);

  SgdConfig bad = config;
  bad.dropped_lr = 2e-3f;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sgd momentum and weight decay") {
  SgdConfig config;
  config.base_lr = 0.1f;
  config.dropped_lr = 0.01f;
  config.weight_decay = 0.1f;
  config.momentum = 0.5f;
  Sgd sgd(config);

  Tensor w = Tensor::from_data({1}, {1.0f}, true);
  std::vector<Tensor> params{w};
  w.grad()[0] = 1.0f;
  sgd.step(params, 0);
  // v = g + wd*w = 1.1; w = 1 - 0.1*1.1 = 0.89
  CHECK(w.data()[0] == doctest::Approx(0.89f));
  w.zero_grad();
  w.grad()[0] = 1.0f;
  sgd.step(params, 0);
  // v = 0.5*1.1 + (1 + 0.1*0.89) = 1.639; w = 0.89 - 0.1639
  CHECK(w.data()[0] == doctest::Approx(0.7261f));
}

TEST_CASE("init_weights determinism and statistics") {
  Tensor z = init_weights({4, 4}, InitScheme::kZeros, 7);
  for (float v : z.data()) CHECK(v == 0.0f);

  Tensor a = init_weights({16, 8}, InitScheme::kUniformFanBalanced, 42);
  Tensor b = init_weights({16, 8}, InitScheme::kUniformFanBalanced, 42);
  CHECK(a.data() == b.data());
  Tensor c = init_weights({16, 8}, InitScheme::kUniformFanBalanced, 43);
  CHECK(a.data() != c.data());

  // Bound: |w| <= sqrt(6 / (fan_in + fan_out)).
  const float bound = std::sqrt(6.0f / (8 + 16));
  for (float v : a.data()) CHECK(std::abs(v) <= bound);

  // Sample mean of 1e5 draws within 3 sigma of zero.
  Tensor big = init_weights({100, 1000}, InitScheme::kUniformFanBalanced, 5);
  double mean = 0.0;
  for (float v : big.data()) mean += v;
  mean /= double(big.numel());
  const double a_bound = std::sqrt(6.0 / (1000 + 100));
  const double sigma = a_bound / std::sqrt(3.0) / std::sqrt(double(big.numel()));
  CHECK(std::abs(mean) < 3.0 * sigma);
}

TEST_CASE("gradient accumulation across two uses of one parameter") {
  // One weight used twice: gradients add.
  Tensor x = Tensor::from_data({1, 1}, {3.0f});
  Tensor w = Tensor::from_data({1, 1}, {2.0f}, true);
  Tensor b = Tensor::zeros({1});
  Tape tape;
  Tensor first = fully_connected(&tape, x, w, b);
  Tensor second = fully_connected(&tape, first, w, b);  // w^2 * x
  Tensor loss = sum_all(&tape, second);
  tape.backward(loss);
  // d(w^2 x)/dw = 2 w x = 12.
  CHECK(w.grad()[0] == doctest::Approx(12.0f));
}
