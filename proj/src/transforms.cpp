#include "patent/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "patent/error.hpp"

namespace patent {

namespace {

constexpr std::size_t kMinFitSize = 10;
constexpr double kGridStep = 0.1;
constexpr double kLambdaTolerance = 1e-4;

void require_fit_sample(std::span<const double> y) {
  if (y.size() < kMinFitSize) {
    fail(ErrorKind::domain, fmt::format("need at least {} values to fit a transform, got {}", kMinFitSize, y.size()));
  }
  for (double v : y) {
    if (!std::isfinite(v)) fail(ErrorKind::domain, "transform fit sample contains a non-finite value");
  }
  auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*lo == *hi) fail(ErrorKind::degenerate, "transform fit sample has zero variance");
}

}  // namespace

double boxcox(double y, double lambda) {
  if (!(y > 0)) fail(ErrorKind::domain, fmt::format("Box-Cox needs a positive value, got {}", y));
  if (lambda == 0.0) return std::log(y);
  return std::expm1(lambda * std::log(y)) / lambda;
}

double boxcox_inverse(double z, double lambda) {
  if (lambda == 0.0) return std::exp(z);
  double base = 1.0 + lambda * z;
  if (!(base > 0)) {
    fail(ErrorKind::domain, fmt::format("{} is outside the image of Box-Cox with lambda {}", z, lambda));
  }
  return std::exp(std::log1p(lambda * z) / lambda);
}

double boxcox_log_likelihood(std::span<const double> y, double lambda) {
  const double n = static_cast<double>(y.size());
  double sum_log = 0.0, mean = 0.0;
  std::vector<double> z(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum_log += std::log(y[i]);
    z[i] = boxcox(y[i], lambda);
    mean += z[i];
  }
  mean /= n;
  double ss = 0.0;
  for (double v : z) ss += (v - mean) * (v - mean);
  double llf = -0.5 * n * std::log(ss / n) + (lambda - 1.0) * sum_log;
  return std::isfinite(llf) ? llf : -std::numeric_limits<double>::infinity();
}

double BoxCoxTransform::apply(double y) const {
  double shifted = y + shift;
  if (!(shifted > 0)) {
    fail(ErrorKind::domain, fmt::format("value {} is not positive after shift {}", y, shift));
  }
  return boxcox(shifted, lambda);
}

double BoxCoxTransform::inverse(double z) const { return boxcox_inverse(z, lambda) - shift; }

BoxCoxTransform fit_boxcox(std::span<const double> train) {
  require_fit_sample(train);
  BoxCoxTransform t;
  t.fitted_on = train.size();
  const double lo = *std::min_element(train.begin(), train.end());
  t.shift = lo > 0 ? 0.0 : 1e-6 - lo;
  std::vector<double> y(train.begin(), train.end());
  for (double& v : y) {
    v += t.shift;
    if (!(v > 0)) fail(ErrorKind::domain, fmt::format("value {} is not positive after shift {}", v - t.shift, t.shift));
  }
  auto llf = [&](double lambda) { return boxcox_log_likelihood(y, lambda); };

  const int steps = static_cast<int>(std::lround((kBoxCoxLambdaMax - kBoxCoxLambdaMin) / kGridStep));
  double best = kBoxCoxLambdaMin, best_llf = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    double lambda = kBoxCoxLambdaMin + kGridStep * i;
    double v = llf(lambda);
    if (v > best_llf) {
      best_llf = v;
      best = lambda;
    }
  }
  double a = std::max(kBoxCoxLambdaMin, best - kGridStep);
  double b = std::min(kBoxCoxLambdaMax, best + kGridStep);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = llf(c), fd = llf(d);
  while (b - a > kLambdaTolerance) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = llf(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = llf(d);
    }
  }
  double refined = 0.5 * (a + b);
  t.lambda = llf(refined) >= best_llf ? refined : best;
  if (!std::isfinite(t.lambda)) fail(ErrorKind::domain, "Box-Cox lambda fit failed");
  return t;
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::boxcox: return "boxcox";
    case TransformKind::log1p: return "log1p";
    case TransformKind::zscore: return "zscore";
    case TransformKind::identity: return "identity";
  }
  return "identity";
}

TransformKind parse_transform_kind(std::string_view text) {
  if (text == "boxcox") return TransformKind::boxcox;
  if (text == "log1p") return TransformKind::log1p;
  if (text == "zscore") return TransformKind::zscore;
  if (text == "identity") return TransformKind::identity;
  fail(ErrorKind::config, fmt::format("unknown transform '{}'", text));
}

TargetTransform TargetTransform::fit(TransformKind kind, std::span<const double> train) {
  TargetTransform t;
  t.kind = kind;
  switch (kind) {
    case TransformKind::boxcox: {
      auto b = fit_boxcox(train);
      t.lambda = b.lambda;
      t.shift = b.shift;
      break;
    }
    case TransformKind::zscore: {
      require_fit_sample(train);
      double mean = 0.0;
      for (double v : train) mean += v;
      mean /= static_cast<double>(train.size());
      double ss = 0.0;
      for (double v : train) ss += (v - mean) * (v - mean);
      t.shift = mean;
      t.scale = std::sqrt(ss / static_cast<double>(train.size() - 1));
      break;
    }
    case TransformKind::log1p:
      for (double v : train) {
        if (!(v > -1.0)) fail(ErrorKind::domain, fmt::format("log1p needs values above -1, got {}", v));
      }
      break;
    case TransformKind::identity: break;
  }
  return t;
}

double TargetTransform::apply(double y) const {
  switch (kind) {
    case TransformKind::boxcox: return BoxCoxTransform{lambda, shift, 0}.apply(y);
    case TransformKind::log1p:
      if (!(y > -1.0)) fail(ErrorKind::domain, fmt::format("log1p needs values above -1, got {}", y));
      return std::log1p(y);
    case TransformKind::zscore: return (y - shift) / scale;
    case TransformKind::identity: return y;
  }
  return y;
}

double TargetTransform::inverse(double z) const {
  switch (kind) {
    case TransformKind::boxcox: return BoxCoxTransform{lambda, shift, 0}.inverse(z);
    case TransformKind::log1p: return std::expm1(z);
    case TransformKind::zscore: return z * scale + shift;
    case TransformKind::identity: return z;
  }
  return z;
}

std::vector<double> TargetTransform::apply(std::span<const double> y) const {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = apply(y[i]);
  return out;
}

nlohmann::json TargetTransform::to_json() const {
  nlohmann::json j = {{"kind", to_string(kind)}, {"lambda", lambda}, {"shift", shift}};
  if (kind == TransformKind::zscore) j["scale"] = scale;
  return j;
}

TargetTransform TargetTransform::from_json(const nlohmann::json& j) {
  TargetTransform t;
  t.kind = parse_transform_kind(j.at("kind").get<std::string>());
  t.lambda = j.value("lambda", 0.0);
  t.shift = j.value("shift", 0.0);
  t.scale = j.value("scale", 1.0);
  return t;
}

}  // namespace patent
