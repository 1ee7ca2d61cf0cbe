#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "patent/error.hpp"
#include "patent/neuralnet.hpp"

using namespace patent;

namespace {

// mpmath at 50 digits.
constexpr double kMish1 = 0.8650983882673103;
constexpr double kMishMinX = -1.1924312145;
constexpr double kMishMin = -0.3088434130172504;

MLPConfig small_config(Task task, std::size_t dim = 5) {
  MLPConfig c;
  c.input_dim = dim;
  c.hidden_dims = {6, 4};
  c.dropout_rate = 0.0;
  c.task = task;
  c.epochs = 5;
  c.batch_size = 16;
  c.seed = 3;
  return c;
}

Matrix random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Matrix X(n, d);
  for (double& v : X.storage()) v = z(rng);
  return X;
}

}  // namespace

TEST(Activation, MishReferenceValues) {
  EXPECT_NEAR(mish(1.0), kMish1, 1e-15);
  EXPECT_EQ(mish(0.0), 0.0);
  EXPECT_NEAR(mish(kMishMinX), kMishMin, 1e-12);
  EXPECT_NEAR(mish_derivative(kMishMinX), 0.0, 1e-9);
  EXPECT_NEAR(mish(-30.0), -2.8072868906519e-12, 1e-24);
  EXPECT_NEAR(mish(-40.0), -1.6993e-16, 1e-19);
  EXPECT_EQ(mish(40.0), 40.0);
  EXPECT_TRUE(std::isfinite(mish(-800.0)));
  EXPECT_TRUE(std::isfinite(mish(800.0)));
}

TEST(Activation, DerivativesMatchFiniteDifferences) {
  for (double x = -12; x <= 12; x += 0.37) {
    const double h = 1e-6;
    EXPECT_NEAR(mish_derivative(x), (mish(x + h) - mish(x - h)) / (2 * h), 1e-7) << x;
    EXPECT_NEAR(swish_derivative(x), (swish(x + h) - swish(x - h)) / (2 * h), 1e-7) << x;
  }
  EXPECT_DOUBLE_EQ(swish(2.0), 2.0 / (1 + std::exp(-2.0)));
  EXPECT_DOUBLE_EQ(softplus(0.0), std::log(2.0));
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
}

TEST(MLP, InitIsFanInScaledUniform) {
  MLPConfig c = small_config(Task::binary, 400);
  c.hidden_dims = {300};
  MLPModel m(c);
  const auto& w = m.layers()[0].weights;
  double bound = std::sqrt(3.0 / 400.0), sumsq = 0;
  for (double v : w.storage()) {
    EXPECT_LE(std::abs(v), bound);
    sumsq += v * v;
  }
  // Var of U(-b, b) is b^2/3 = 1/fan_in.
  EXPECT_NEAR(sumsq / w.storage().size(), 1.0 / 400.0, 0.05 / 400.0);
  EXPECT_EQ(m.parameter_count(), 400u * 300 + 300 + 300 + 1);
}

TEST(MLP, GradientCheckBothHeads) {
  for (Task task : {Task::binary, Task::regression}) {
    for (Activation act : {Activation::mish, Activation::swish}) {
      MLPConfig c = small_config(task);
      c.activation = act;
      MLPModel m(c);
      std::vector<double> x = {0.3, -1.2, 0.7, 2.0, -0.1};
      EXPECT_LT(gradient_check(m, x, task == Task::binary ? 1.0 : 0.8), 1e-6);
    }
  }
}

TEST(MLP, BatchGradientAgreesWithNumericLoss) {
  MLPModel m(small_config(Task::regression));
  Matrix X = random_rows(7, 5, 1);
  std::vector<double> y = {1, -2, 0.5, 0, 3, 1, -1};
  Gradients g = loss_gradient(m, X, y);
  const double h = 1e-6;
  for (std::size_t l = 0; l < m.layers().size(); ++l) {
    auto& w = m.layers()[l].weights.storage();
    for (std::size_t i = 0; i < w.size(); i += 3) {
      double keep = w[i];
      w[i] = keep + h;
      double up = loss(m, X, y);
      w[i] = keep - h;
      double down = loss(m, X, y);
      w[i] = keep;
      EXPECT_NEAR(g.weights[l].storage()[i], (up - down) / (2 * h), 1e-6);
    }
  }
}

TEST(MLP, TrainingIsDeterministicAndLearns) {
  Matrix X = random_rows(400, 5, 2);
  std::vector<double> y(400);
  for (std::size_t i = 0; i < 400; ++i) y[i] = X(i, 0) + X(i, 1) > 0 ? 1.0 : 0.0;
  MLPConfig c = small_config(Task::binary);
  c.epochs = 40;
  c.adam.learning_rate = 0.01;
  c.dropout_rate = 0.1;
  auto a = train(MLPModel(c), X, y);
  auto b = train(MLPModel(c), X, y);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  ASSERT_EQ(a.loss_trace.size(), 40u);
  EXPECT_LT(a.loss_trace.back(), 0.5 * a.loss_trace.front());
  EXPECT_EQ(a.model.trained_epochs(), 40u);
  c.seed = 4;
  EXPECT_NE(train(MLPModel(c), X, y).model, a.model);
}

TEST(MLP, DropoutMaskValues) {
  MLPConfig c = small_config(Task::binary);
  c.hidden_dims = {200};
  c.dropout_rate = 0.25;
  MLPModel m(c);
  Matrix X = random_rows(50, 5, 3);
  std::mt19937_64 rng(9);
  ForwardCache cache;
  m.forward(X, Mode::train, &rng, &cache);
  ASSERT_EQ(cache.mask.size(), 1u);
  std::size_t zeros = 0;
  for (double v : cache.mask[0].storage()) {
    EXPECT_TRUE(v == 0.0 || v == 1.0 / 0.75) << v;
    zeros += v == 0.0;
  }
  EXPECT_NEAR(static_cast<double>(zeros) / cache.mask[0].storage().size(), 0.25, 0.02);
  // Inference ignores dropout entirely.
  EXPECT_EQ(m.forward(X, Mode::infer), m.forward(X, Mode::infer));
  EXPECT_THROW(m.forward(X, Mode::train), Error);
}

TEST(MLP, JsonRoundTripIsExact) {
  auto r = train(MLPModel(small_config(Task::regression)), random_rows(64, 5, 4), std::vector<double>(64, 0.5));
  auto back = MLPModel::from_json(nlohmann::json::parse(r.model.to_json().dump()));
  EXPECT_EQ(back, r.model);
  auto path = std::filesystem::path(testing::TempDir()) / "mlp.json";
  r.model.save(path);
  EXPECT_EQ(MLPModel::load(path), r.model);
  try {
    MLPModel::load(std::filesystem::path(testing::TempDir()) / "absent.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_found);
  }
}

TEST(MLP, UsageErrors) {
  MLPModel bin(small_config(Task::binary));
  MLPModel reg(small_config(Task::regression));
  std::vector<double> x(5, 0.1), short_x(3, 0.1);
  EXPECT_THROW(bin.predict_value(x), Error);
  EXPECT_THROW(reg.predict_proba(x), Error);
  EXPECT_THROW(bin.forward(short_x), Error);
  double p = bin.predict_proba(x);
  EXPECT_GT(p, 0);
  EXPECT_LT(p, 1);
  EXPECT_DOUBLE_EQ(p, sigmoid(bin.forward(x)));

  MLPConfig c = small_config(Task::binary);
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = small_config(Task::binary);
  c.hidden_dims = {};
  EXPECT_THROW(MLPModel{c}, Error);
  Matrix X = random_rows(4, 5, 5);
  EXPECT_THROW(train(bin, X, std::vector<double>{0, 1, 2, 0}), Error);
  EXPECT_THROW(train(bin, X, std::vector<double>{0, 1}), Error);
  EXPECT_THROW(parse_activation("tanh"), Error);
}

TEST(MLP, DivergenceIsReported) {
  MLPConfig c = small_config(Task::regression);
  c.adam.learning_rate = 1e6;
  Matrix X = random_rows(32, 5, 6);
  std::vector<double> y(32, 1e200);
  try {
    train(MLPModel(c), X, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::diverged);
  }
}

TEST(MLP, LossFormulas) {
  std::vector<double> logits = {0.0, 2.0}, labels = {1.0, 0.0};
  double want = (std::log(2.0) + std::log1p(std::exp(2.0))) / 2;
  EXPECT_NEAR(task_loss(Task::binary, logits, labels), want, 1e-15);
  std::vector<double> out = {1, 2}, tgt = {0, 0};
  EXPECT_DOUBLE_EQ(task_loss(Task::regression, out, tgt), 2.5);
  // Extreme logits stay finite.
  std::vector<double> big = {800.0};
  std::vector<double> zero = {0.0};
  EXPECT_NEAR(task_loss(Task::binary, big, zero), 800.0, 1e-9);
}
