#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "patent/matrix.hpp"

namespace patent {

struct RegressionResult {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> standard_errors;
  std::vector<double> t_stats;
  double r2 = 0;
  double adj_r2 = 0;
  std::size_t n = 0;
  std::size_t n_clusters = 0;
  std::size_t df_resid = 0;
  std::vector<double> residuals;

  // Index of a named coefficient; not_found error otherwise.
  std::size_t index(std::string_view name) const;
  double coef(std::string_view name) const { return coefficients[index(name)]; }
  double t(std::string_view name) const { return t_stats[index(name)]; }
};

// Least squares via Householder QR with classical standard errors. With
// `intercept` a leading "const" column is added. Exact collinearity raises a
// singular_design error naming the first column that is a combination of the
// ones before it.
RegressionResult ols(const Matrix& X, std::span<const double> y, bool intercept,
                     std::vector<std::string> names = {});

// Firm fixed effects by within-firm demeaning, with the grand means added back
// so a constant is reported. Standard errors are clustered by firm with the
// G/(G-1) * (n-1)/(n-k) correction, k = regressors + constant. r2 is the
// dummy-variable R^2; adj_r2 charges for the firm intercepts too.
RegressionResult fe_panel(const Matrix& X, std::span<const double> y, std::span<const std::string> firm_ids,
                          std::vector<std::string> names = {});

struct MeanTest {
  double mean = 0;
  double sd = 0;
  double t_stat = 0;
  double p_value = 0;  // two-sided, Student t with n-1 df
  std::size_t n = 0;
};

MeanTest t_test_mean(std::span<const double> values);

struct SignedRankTest {
  double median = 0;
  double w_plus = 0;     // sum of ranks of positive values
  double statistic = 0;  // normal score of w_plus (tie-corrected)
  double p_value = 0;    // two-sided; exact when at most 25 nonzero values
  bool exact = false;
  std::size_t n_nonzero = 0;
  bool significant(double alpha = 0.05) const { return p_value < alpha; }
};

// Wilcoxon signed-rank test of a zero median; zeros are dropped.
SignedRankTest signed_rank_median(std::span<const double> values);

// Linear interpolation between order statistics (h = (n-1)q).
double quantile(std::span<const double> values, double q);
double quantile_sorted(std::span<const double> sorted, double q);

struct WinsorBounds {
  double lower = 0;
  double upper = 0;
};
WinsorBounds winsor_bounds(std::span<const double> values, double pct);
std::vector<double> clip(std::span<const double> values, WinsorBounds bounds);
// Both tails clipped at the pct and 1-pct quantiles; 0 < pct < 0.5.
std::vector<double> winsorize(std::span<const double> values, double pct);

// "***", "**", "*" or "" for p below 0.01, 0.05, 0.10.
std::string significance_stars(double p_value);

// One-tailed p-value of a Student t statistic in the direction of its sign.
double one_tailed_p(double t_stat, double df);
double two_tailed_p(double t_stat, double df);

}  // namespace patent
