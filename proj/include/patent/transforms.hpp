#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace patent {

inline constexpr double kBoxCoxLambdaMin = -5.0;
inline constexpr double kBoxCoxLambdaMax = 5.0;

// (y^l - 1)/l, or ln y at l = 0.
double boxcox(double y, double lambda);
double boxcox_inverse(double z, double lambda);

// Profile log-likelihood of the Box-Cox normal model at `lambda`, up to a constant:
// -n/2 ln(sigma^2(lambda)) + (lambda - 1) sum ln y.
double boxcox_log_likelihood(std::span<const double> y, double lambda);

struct BoxCoxTransform {
  double lambda = 1.0;
  double shift = 0.0;
  std::size_t fitted_on = 0;

  double apply(double y) const;
  double inverse(double z) const;
};

// Shift = 0 if min > 0, else 1e-6 - min. Lambda maximizes the profile likelihood
// over [-5, 5]: coarse grid, then golden section to 1e-4.
BoxCoxTransform fit_boxcox(std::span<const double> train);

enum class TransformKind { boxcox, log1p, zscore, identity };

std::string to_string(TransformKind kind);
TransformKind parse_transform_kind(std::string_view text);

// One interface over the target transforms the value task can use.
struct TargetTransform {
  TransformKind kind = TransformKind::identity;
  double lambda = 0.0;  // boxcox
  double shift = 0.0;   // boxcox shift, or z-score mean
  double scale = 1.0;   // z-score sd

  static TargetTransform fit(TransformKind kind, std::span<const double> train);

  double apply(double y) const;
  double inverse(double z) const;
  std::vector<double> apply(std::span<const double> y) const;

  nlohmann::json to_json() const;
  static TargetTransform from_json(const nlohmann::json& j);
};

}  // namespace patent
