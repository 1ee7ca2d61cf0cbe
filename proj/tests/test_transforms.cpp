#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "patent/error.hpp"
#include "patent/transforms.hpp"

using namespace patent;

namespace {

std::vector<double> lognormal(std::size_t n, std::uint64_t seed, double mu = 0.5, double sigma = 0.8) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> d(mu, sigma);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// Independent profile likelihood, written from the textbook definition.
double loglik_oracle(const std::vector<double>& y, double lambda) {
  const double n = static_cast<double>(y.size());
  std::vector<double> z(y.size());
  double slog = 0, mean = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    z[i] = lambda == 0 ? std::log(y[i]) : (std::pow(y[i], lambda) - 1) / lambda;
    mean += z[i];
    slog += std::log(y[i]);
  }
  mean /= n;
  double ss = 0;
  for (double v : z) ss += (v - mean) * (v - mean);
  return -n / 2 * std::log(ss / n) + (lambda - 1) * slog;
}

}  // namespace

TEST(BoxCox, LambdaZeroIsLog) {
  for (double y : {0.01, 0.5, 1.0, 7.0, 1e6}) {
    EXPECT_DOUBLE_EQ(boxcox(y, 0.0), std::log(y));
    EXPECT_DOUBLE_EQ(boxcox_inverse(std::log(y), 0.0), y);
  }
  EXPECT_DOUBLE_EQ(boxcox(4.0, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(boxcox(3.0, 1.0), 2.0);
}

TEST(BoxCox, RoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ly(-5, 5), lam(-2, 2);
  for (int i = 0; i < 5000; ++i) {
    double y = std::exp(ly(rng)), l = lam(rng);
    double back = boxcox_inverse(boxcox(y, l), l);
    EXPECT_LT(std::abs(back - y) / y, 1e-9) << y << " " << l;
  }
}

TEST(BoxCox, FitRecoversLogForLognormal) {
  auto y = lognormal(5000, 2);
  auto t = fit_boxcox(y);
  EXPECT_EQ(t.shift, 0.0);
  EXPECT_NEAR(t.lambda, 0.0, 0.15);
  EXPECT_EQ(t.fitted_on, 5000u);

  double best = -5, best_ll = -INFINITY;
  for (double l = -5; l <= 5; l += 1e-3) {
    double ll = loglik_oracle(y, l);
    if (ll > best_ll) best_ll = ll, best = l;
  }
  EXPECT_NEAR(t.lambda, best, 2e-3);
  EXPECT_NEAR(boxcox_log_likelihood(y, 0.3), loglik_oracle(y, 0.3), 1e-6 * std::abs(loglik_oracle(y, 0.3)));
}

TEST(BoxCox, ShiftForNonPositiveData) {
  std::vector<double> y = {-2, -1, 0, 0.5, 1, 3, 4, 8, 9, 12};
  auto t = fit_boxcox(y);
  EXPECT_DOUBLE_EQ(t.shift, 1e-6 + 2);
  for (double v : y) EXPECT_NEAR(t.inverse(t.apply(v)), v, 1e-9 * std::max(1.0, std::abs(v)));
}

TEST(BoxCox, PreservesRank) {
  auto y = lognormal(300, 3, 0, 2);
  for (TransformKind k : {TransformKind::boxcox, TransformKind::log1p, TransformKind::zscore}) {
    auto t = TargetTransform::fit(k, y);
    auto z = t.apply(y);
    for (std::size_t i = 0; i < y.size(); ++i) {
      for (std::size_t j = i + 1; j < y.size(); j += 7) {
        if (y[i] < y[j]) {
          EXPECT_LT(z[i], z[j]);
        }
      }
    }
  }
}

TEST(BoxCox, DomainAndDegenerateErrors) {
  auto kind = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;
  };
  EXPECT_EQ(kind([] { boxcox(0.0, 0.5); }), ErrorKind::domain);
  EXPECT_EQ(kind([] { boxcox(-1.0, 0.0); }), ErrorKind::domain);
  // With lambda = 2 the image is (-1/2, inf).
  EXPECT_EQ(kind([] { boxcox_inverse(-0.6, 2.0); }), ErrorKind::domain);
  std::vector<double> flat(20, 3.0), tiny = {1, 2, 3};
  EXPECT_EQ(kind([&] { fit_boxcox(flat); }), ErrorKind::degenerate);
  EXPECT_EQ(kind([&] { fit_boxcox(tiny); }), ErrorKind::domain);
  auto t = fit_boxcox(lognormal(50, 4));
  EXPECT_EQ(kind([&] { t.apply(-5.0); }), ErrorKind::domain);
  EXPECT_EQ(kind([] { parse_transform_kind("sqrt"); }), ErrorKind::config);
}

TEST(TargetTransform, JsonRoundTrip) {
  auto y = lognormal(100, 5);
  for (TransformKind k :
       {TransformKind::boxcox, TransformKind::log1p, TransformKind::zscore, TransformKind::identity}) {
    auto t = TargetTransform::fit(k, y);
    auto back = TargetTransform::from_json(nlohmann::json::parse(t.to_json().dump()));
    EXPECT_EQ(back.kind, k);
    for (double v : {0.2, 1.0, 5.0}) {
      EXPECT_EQ(back.apply(v), t.apply(v));
      EXPECT_NEAR(t.inverse(t.apply(v)), v, 1e-9 * v);
    }
  }
  auto z = TargetTransform::fit(TransformKind::zscore, y);
  auto zy = z.apply(y);
  double m = 0;
  for (double v : zy) m += v;
  EXPECT_NEAR(m / zy.size(), 0.0, 1e-12);
}
