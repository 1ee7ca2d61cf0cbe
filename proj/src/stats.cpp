#include "patent/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "patent/error.hpp"

namespace patent {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd to_eigen(const Matrix& X) {
  MatrixXd m(X.rows(), X.cols());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    for (std::size_t c = 0; c < X.cols(); ++c) m(r, c) = X(r, c);
  }
  return m;
}

std::vector<std::string> default_names(std::vector<std::string> names, std::size_t k) {
  if (names.empty()) {
    for (std::size_t j = 0; j < k; ++j) names.push_back(fmt::format("x{}", j + 1));
  }
  if (names.size() != k) fail(ErrorKind::shape, fmt::format("{} names for {} columns", names.size(), k));
  return names;
}

void require_full_rank(const MatrixXd& X, const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  if (qr.rank() == X.cols()) return;
  for (Eigen::Index j = 1; j <= X.cols(); ++j) {
    Eigen::ColPivHouseholderQR<MatrixXd> partial(X.leftCols(j));
    if (partial.rank() < j) {
      fail(ErrorKind::singular_design,
           fmt::format("design is singular: column '{}' is a linear combination of earlier columns",
                       names[static_cast<std::size_t>(j - 1)]));
    }
  }
  fail(ErrorKind::singular_design, "design matrix is rank deficient");
}

struct Fit {
  VectorXd beta;
  VectorXd resid;
  MatrixXd xtx_inv;
};

Fit least_squares(const MatrixXd& X, const VectorXd& y) {
  Eigen::HouseholderQR<MatrixXd> qr(X);
  Fit f;
  f.beta = qr.solve(y);
  f.resid = y - X * f.beta;
  const Eigen::Index k = X.cols();
  MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  MatrixXd r_inv = R.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(k, k));
  f.xtx_inv = r_inv * r_inv.transpose();
  return f;
}

void fill_tstats(RegressionResult& out) {
  out.t_stats.resize(out.coefficients.size());
  for (std::size_t i = 0; i < out.coefficients.size(); ++i) {
    out.t_stats[i] = out.standard_errors[i] > 0 ? out.coefficients[i] / out.standard_errors[i]
                                                : std::nan("");
  }
}

double centered_ss(std::span<const double> y) {
  double m = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - m) * (v - m);
  return ss;
}

}  // namespace

std::size_t RegressionResult::index(std::string_view name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail(ErrorKind::not_found, fmt::format("no coefficient named '{}'", name));
  return static_cast<std::size_t>(it - names.begin());
}

RegressionResult ols(const Matrix& X, std::span<const double> y, bool intercept, std::vector<std::string> names) {
  if (X.rows() != y.size()) fail(ErrorKind::shape, fmt::format("{} rows but {} targets", X.rows(), y.size()));
  names = default_names(std::move(names), X.cols());
  MatrixXd D = to_eigen(X);
  if (intercept) {
    MatrixXd with(D.rows(), D.cols() + 1);
    with.col(0).setOnes();
    with.rightCols(D.cols()) = D;
    D = std::move(with);
    names.insert(names.begin(), "const");
  }
  const std::size_t n = X.rows(), k = static_cast<std::size_t>(D.cols());
  if (n <= k) fail(ErrorKind::domain, fmt::format("OLS needs more rows ({}) than columns ({})", n, k));
  require_full_rank(D, names);
  VectorXd Y = Eigen::Map<const VectorXd>(y.data(), static_cast<Eigen::Index>(n));
  Fit f = least_squares(D, Y);

  RegressionResult out;
  out.names = std::move(names);
  out.n = n;
  out.df_resid = n - k;
  const double ssr = f.resid.squaredNorm();
  const double sigma2 = ssr / static_cast<double>(out.df_resid);
  for (std::size_t j = 0; j < k; ++j) {
    out.coefficients.push_back(f.beta(static_cast<Eigen::Index>(j)));
    out.standard_errors.push_back(std::sqrt(sigma2 * f.xtx_inv(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j))));
  }
  fill_tstats(out);
  const double sst = intercept ? centered_ss(y) : Y.squaredNorm();
  out.r2 = sst > 0 ? 1.0 - ssr / sst : std::nan("");
  out.adj_r2 = 1.0 - (1.0 - out.r2) * static_cast<double>(n - (intercept ? 1 : 0)) / static_cast<double>(n - k);
  out.residuals.assign(f.resid.data(), f.resid.data() + f.resid.size());
  return out;
}

RegressionResult fe_panel(const Matrix& X, std::span<const double> y, std::span<const std::string> firm_ids,
                          std::vector<std::string> names) {
  const std::size_t n = X.rows(), p = X.cols();
  if (y.size() != n || firm_ids.size() != n) {
    fail(ErrorKind::shape, fmt::format("panel has {} rows, {} targets and {} firm ids", n, y.size(), firm_ids.size()));
  }
  names = default_names(std::move(names), p);

  // Firms in first-appearance order.
  std::unordered_map<std::string, std::size_t> firm_index;
  std::vector<std::size_t> group(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = firm_index.emplace(firm_ids[i], firm_index.size());
    group[i] = it->second;
  }
  const std::size_t G = firm_index.size();
  const std::size_t k = p + 1;
  if (n <= p + G) fail(ErrorKind::domain, fmt::format("panel of {} rows cannot identify {} regressors and {} firms", n, p, G));

  std::vector<double> count(G, 0.0);
  MatrixXd sums = MatrixXd::Zero(static_cast<Eigen::Index>(G), static_cast<Eigen::Index>(p + 1));
  for (std::size_t i = 0; i < n; ++i) {
    count[group[i]] += 1.0;
    auto g = static_cast<Eigen::Index>(group[i]);
    for (std::size_t j = 0; j < p; ++j) sums(g, static_cast<Eigen::Index>(j)) += X(i, j);
    sums(g, static_cast<Eigen::Index>(p)) += y[i];
  }
  VectorXd grand = VectorXd::Zero(static_cast<Eigen::Index>(p + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) grand(static_cast<Eigen::Index>(j)) += X(i, j);
    grand(static_cast<Eigen::Index>(p)) += y[i];
  }
  grand /= static_cast<double>(n);

  // Within transform with grand means restored; column 0 is the constant.
  MatrixXd D(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  VectorXd Y(static_cast<Eigen::Index>(n));
  std::vector<double> max_within(p, 0.0), max_abs(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = static_cast<Eigen::Index>(i);
    auto g = static_cast<Eigen::Index>(group[i]);
    D(r, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      auto c = static_cast<Eigen::Index>(j);
      double within = X(i, j) - sums(g, c) / count[group[i]];
      max_within[j] = std::max(max_within[j], std::abs(within));
      max_abs[j] = std::max(max_abs[j], std::abs(X(i, j)));
      D(r, c + 1) = within + grand(c);
    }
    Y(r) = y[i] - sums(g, static_cast<Eigen::Index>(p)) / count[group[i]] + grand(static_cast<Eigen::Index>(p));
  }
  for (std::size_t j = 0; j < p; ++j) {
    if (max_within[j] <= 1e-12 * std::max(1.0, max_abs[j])) {
      fail(ErrorKind::absorbed_regressor,
           fmt::format("regressor '{}' does not vary within any firm and is absorbed by the firm effects", names[j]));
    }
  }
  std::vector<std::string> all_names = {"const"};
  all_names.insert(all_names.end(), names.begin(), names.end());
  require_full_rank(D, all_names);
  Fit f = least_squares(D, Y);

  // Firm-clustered sandwich.
  MatrixXd scores = MatrixXd::Zero(static_cast<Eigen::Index>(G), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < n; ++i) {
    auto r = static_cast<Eigen::Index>(i);
    scores.row(static_cast<Eigen::Index>(group[i])) += D.row(r) * f.resid(r);
  }
  MatrixXd meat = scores.transpose() * scores;
  const double dn = static_cast<double>(n), dg = static_cast<double>(G), dk = static_cast<double>(k);
  const double factor = dg / (dg - 1.0) * (dn - 1.0) / (dn - dk);
  MatrixXd V = factor * f.xtx_inv * meat * f.xtx_inv;

  RegressionResult out;
  out.names = std::move(all_names);
  out.n = n;
  out.n_clusters = G;
  out.df_resid = G - 1;
  for (std::size_t j = 0; j < k; ++j) {
    auto c = static_cast<Eigen::Index>(j);
    out.coefficients.push_back(f.beta(c));
    out.standard_errors.push_back(std::sqrt(std::max(V(c, c), 0.0)));
  }
  fill_tstats(out);
  // Residuals of the within fit equal those of the dummy-variable regression.
  const double ssr = f.resid.squaredNorm();
  const double sst = centered_ss(y);
  out.r2 = 1.0 - ssr / sst;
  out.adj_r2 = 1.0 - (1.0 - out.r2) * (dn - 1.0) / (dn - static_cast<double>(p + G));
  out.residuals.assign(f.resid.data(), f.resid.data() + f.resid.size());
  return out;
}

MeanTest t_test_mean(std::span<const double> values) {
  if (values.size() < 2) fail(ErrorKind::domain, "t-test needs at least two values");
  MeanTest t;
  t.n = values.size();
  t.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(t.n);
  double ss = 0.0;
  for (double v : values) ss += (v - t.mean) * (v - t.mean);
  t.sd = std::sqrt(ss / static_cast<double>(t.n - 1));
  if (!(t.sd > 0)) fail(ErrorKind::degenerate, "t-test on a sample with zero variance");
  t.t_stat = t.mean / (t.sd / std::sqrt(static_cast<double>(t.n)));
  t.p_value = two_tailed_p(t.t_stat, static_cast<double>(t.n - 1));
  return t;
}

SignedRankTest signed_rank_median(std::span<const double> values) {
  if (values.size() < 2) fail(ErrorKind::domain, "signed-rank test needs at least two values");
  SignedRankTest out;
  out.median = quantile(values, 0.5);
  std::vector<double> d;
  for (double v : values) {
    if (v != 0.0) d.push_back(v);
  }
  if (d.empty()) fail(ErrorKind::degenerate, "signed-rank test on all-zero values");
  const std::size_t n = d.size();
  out.n_nonzero = n;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  // Doubled midranks stay integral.
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    const long twice_mid = static_cast<long>(i + 1 + j);
    for (std::size_t m = i; m < j; ++m) rank2[order[m]] = twice_mid;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  long w2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0) w2 += rank2[i];
  }
  out.w_plus = static_cast<double>(w2) / 2.0;
  const double dn = static_cast<double>(n);
  const double expected = dn * (dn + 1.0) / 4.0;
  const double variance = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
  out.statistic = variance > 0 ? (out.w_plus - expected) / std::sqrt(variance) : 0.0;

  if (n <= 25) {
    // Exact null distribution of the doubled positive-rank sum: each rank's
    // sign is a fair coin.
    out.exact = true;
    std::vector<double> dist(static_cast<std::size_t>(total2) + 1, 0.0);
    dist[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (long s = total2; s >= rank2[i]; --s) dist[static_cast<std::size_t>(s)] += dist[static_cast<std::size_t>(s - rank2[i])];
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    // Two-sided: probability of a sum at least as far from the centre.
    const long centre2 = total2;  // 2 * (2 * E[W+]) in doubled units
    const long dev = std::abs(2 * w2 - centre2);
    double tail = 0.0;
    for (long s = 0; s <= total2; ++s) {
      if (std::abs(2 * s - centre2) >= dev) tail += dist[static_cast<std::size_t>(s)];
    }
    out.p_value = std::min(1.0, tail / all);
  } else {
    boost::math::normal_distribution<double> z;
    out.p_value = 2.0 * boost::math::cdf(boost::math::complement(z, std::abs(out.statistic)));
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorKind::degenerate, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorKind::domain, fmt::format("quantile level {} outside [0,1]", q));
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return frac == 0.0 ? sorted[lo] : sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double q) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, q);
}

WinsorBounds winsor_bounds(std::span<const double> values, double pct) {
  if (!(pct > 0.0 && pct < 0.5)) fail(ErrorKind::domain, fmt::format("winsorization level {} outside (0, 0.5)", pct));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return {quantile_sorted(sorted, pct), quantile_sorted(sorted, 1.0 - pct)};
}

std::vector<double> clip(std::span<const double> values, WinsorBounds bounds) {
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) v = std::clamp(v, bounds.lower, bounds.upper);
  return out;
}

std::vector<double> winsorize(std::span<const double> values, double pct) {
  if (values.empty()) return {};
  return clip(values, winsor_bounds(values, pct));
}

std::string significance_stars(double p_value) {
  if (p_value < 0.01) return "***";
  if (p_value < 0.05) return "**";
  if (p_value < 0.10) return "*";
  return "";
}

double one_tailed_p(double t_stat, double df) {
  if (!(df > 0)) fail(ErrorKind::domain, "t distribution needs positive degrees of freedom");
  boost::math::students_t_distribution<double> dist(df);
  return boost::math::cdf(boost::math::complement(dist, std::abs(t_stat)));
}

double two_tailed_p(double t_stat, double df) { return std::min(1.0, 2.0 * one_tailed_p(t_stat, df)); }

}  // namespace patent
