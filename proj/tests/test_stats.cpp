#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "patent/error.hpp"
#include "patent/stats.hpp"

using namespace patent;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::io;
}

struct Panel {
  Matrix X;
  std::vector<double> y;
  std::vector<std::string> firms;
  std::vector<int> group;
  int G = 0;
};

Panel make_panel(int G, int per_firm, std::uint64_t seed, double beta_size = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Panel p;
  p.G = G;
  const std::size_t n = static_cast<std::size_t>(G * per_firm);
  p.X = Matrix(n, 2);
  for (int g = 0; g < G; ++g) {
    double effect = 2 * z(rng), level = z(rng);
    int m = per_firm - (g % 3);  // unbalanced
    for (int i = 0; i < m; ++i) {
      double size = level + z(rng), age = z(rng);
      p.X(p.y.size(), 0) = size;
      p.X(p.y.size(), 1) = age;
      p.y.push_back(effect + beta_size * size - 0.2 * age + z(rng) * (1 + 0.5 * (g % 2)));
      p.firms.push_back("F" + std::to_string(g));
      p.group.push_back(g);
    }
  }
  Matrix trimmed(p.y.size(), 2);
  for (std::size_t i = 0; i < p.y.size(); ++i) trimmed(i, 0) = p.X(i, 0), trimmed(i, 1) = p.X(i, 1);
  p.X = trimmed;
  return p;
}

}  // namespace

TEST(Ols, MatchesNormalEquations) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  const std::size_t n = 200;
  Matrix X(n, 3);
  std::vector<double> y(n);
  MatrixXd A(n, 4);
  VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    A(i, 0) = 1;
    for (int j = 0; j < 3; ++j) A(i, j + 1) = X(i, j) = z(rng);
    b(i) = y[i] = 1 + 2 * X(i, 0) - X(i, 2) + z(rng);
  }
  auto r = ols(X, y, true, {"a", "b", "c"});
  MatrixXd xtx_inv = (A.transpose() * A).inverse();
  VectorXd beta = xtx_inv * A.transpose() * b;
  VectorXd e = b - A * beta;
  double s2 = e.squaredNorm() / (n - 4);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(r.coefficients[j], beta(j), 1e-10);
    EXPECT_NEAR(r.standard_errors[j], std::sqrt(s2 * xtx_inv(j, j)), 1e-10);
  }
  EXPECT_EQ(r.names[0], "const");
  EXPECT_EQ(r.df_resid, n - 4);
  double tss = (b.array() - b.mean()).square().sum();
  EXPECT_NEAR(r.r2, 1 - e.squaredNorm() / tss, 1e-12);
  EXPECT_NEAR(r.coef("a"), beta(1), 1e-10);
  EXPECT_EQ(kind_of([&] { r.index("zz"); }), ErrorKind::not_found);
}

TEST(Ols, SingularDesignNamesColumn) {
  Matrix X(10, 3);
  std::vector<double> y(10);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = i;
    X(i, 1) = i * i;
    X(i, 2) = 2 * i + 3 * i * i;
    y[i] = i % 3;
  }
  try {
    ols(X, y, true, {"lin", "sq", "combo"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::singular_design);
    EXPECT_NE(std::string(e.what()).find("combo"), std::string::npos) << e.what();
  }
}

TEST(FixedEffects, MatchesDummyVariableRegression) {
  Panel p = make_panel(30, 12, 2);
  const std::size_t n = p.y.size();
  auto fe = fe_panel(p.X, p.y, p.firms, {"size", "age"});

  // LSDV: regressors plus one dummy per firm, no constant.
  MatrixXd D = MatrixXd::Zero(n, 2 + p.G);
  VectorXd Y(n);
  for (std::size_t i = 0; i < n; ++i) {
    D(i, 0) = p.X(i, 0);
    D(i, 1) = p.X(i, 1);
    D(i, 2 + p.group[i]) = 1;
    Y(i) = p.y[i];
  }
  VectorXd b = D.colPivHouseholderQr().solve(Y);
  VectorXd e = Y - D * b;
  EXPECT_NEAR(fe.coef("size"), b(0), 1e-8);
  EXPECT_NEAR(fe.coef("age"), b(1), 1e-8);
  double tss = (Y.array() - Y.mean()).square().sum();
  EXPECT_NEAR(fe.r2, 1 - e.squaredNorm() / tss, 1e-8);
  // Reported constant: grand mean of y minus slopes at the grand means of x.
  double xs = 0, xa = 0;
  for (std::size_t i = 0; i < n; ++i) xs += p.X(i, 0), xa += p.X(i, 1);
  EXPECT_NEAR(fe.coef("const"), Y.mean() - b(0) * xs / n - b(1) * xa / n, 1e-8);
  for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(fe.residuals[i], e(i), 1e-8);

  // Cluster sandwich on the demeaned-plus-grand-mean design.
  std::vector<double> cnt(p.G), ms(p.G), ma(p.G);
  for (std::size_t i = 0; i < n; ++i) {
    cnt[p.group[i]] += 1, ms[p.group[i]] += p.X(i, 0), ma[p.group[i]] += p.X(i, 1);
  }
  MatrixXd W(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    int g = p.group[i];
    W(i, 0) = 1;
    W(i, 1) = p.X(i, 0) - ms[g] / cnt[g] + xs / n;
    W(i, 2) = p.X(i, 1) - ma[g] / cnt[g] + xa / n;
  }
  MatrixXd bread = (W.transpose() * W).inverse();
  MatrixXd meat = MatrixXd::Zero(3, 3);
  for (int g = 0; g < p.G; ++g) {
    VectorXd s = VectorXd::Zero(3);
    for (std::size_t i = 0; i < n; ++i)
      if (p.group[i] == g) s += W.row(i).transpose() * e(i);
    meat += s * s.transpose();
  }
  double G = p.G, N = n, k = 3;
  MatrixXd V = G / (G - 1) * (N - 1) / (N - k) * bread * meat * bread;
  EXPECT_NEAR(fe.standard_errors[fe.index("size")], std::sqrt(V(1, 1)), 1e-8);
  EXPECT_NEAR(fe.standard_errors[fe.index("age")], std::sqrt(V(2, 2)), 1e-8);
  EXPECT_NEAR(fe.standard_errors[fe.index("const")], std::sqrt(V(0, 0)), 1e-8);
  EXPECT_EQ(fe.n_clusters, static_cast<std::size_t>(p.G));
}

TEST(FixedEffects, AbsorbedRegressor) {
  Panel p = make_panel(10, 6, 3);
  Matrix X(p.y.size(), 2);
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    X(i, 0) = p.X(i, 0);
    X(i, 1) = p.group[i] % 2;  // constant within firm
  }
  try {
    fe_panel(X, p.y, p.firms, {"size", "sector"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::absorbed_regressor);
    EXPECT_NE(std::string(e.what()).find("sector"), std::string::npos);
  }
}

TEST(FixedEffects, RecoversPlantedSize) {
  Panel p = make_panel(250, 20, 4, 0.1);
  ASSERT_GT(p.y.size(), 4700u);
  auto fe = fe_panel(p.X, p.y, p.firms, {"size", "age"});
  EXPECT_GT(fe.t("size"), 2.0);
  EXPECT_NEAR(fe.coef("size"), 0.1, 0.04);
  Panel null = make_panel(250, 20, 5, 0.0);
  EXPECT_LT(std::abs(fe_panel(null.X, null.y, null.firms, {"size", "age"}).coef("size")), 0.05);
}

TEST(TTest, KnownCriticalValues) {
  EXPECT_NEAR(two_tailed_p(2.228138851986, 10), 0.05, 1e-9);
  EXPECT_NEAR(one_tailed_p(-1.812461122811, 10), 0.05, 1e-9);
  std::vector<double> v = {1, 2, 3, 4, 5};
  auto t = t_test_mean(v);
  EXPECT_DOUBLE_EQ(t.mean, 3);
  EXPECT_DOUBLE_EQ(t.sd, std::sqrt(2.5));
  EXPECT_NEAR(t.t_stat, 3 / std::sqrt(2.5 / 5), 1e-12);
  EXPECT_EQ(t.n, 5u);
  EXPECT_EQ(kind_of([] { t_test_mean(std::vector<double>{2, 2, 2}); }), ErrorKind::degenerate);
}

TEST(SignedRank, ExactMatchesEnumeration) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = 3 + rng() % 10;
    std::vector<double> v(n);
    for (double& x : v) x = static_cast<double>(static_cast<int>(rng() % 9) - 3);  // ties and zeros
    v[0] = 1;
    auto r = signed_rank_median(v);
    // Brute force: midranks of |d| among nonzeros, then every sign assignment.
    std::vector<double> d;
    for (double x : v)
      if (x != 0) d.push_back(x);
    std::vector<double> rank(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      double less = 0, equal = 0;
      for (double y : d) less += std::abs(y) < std::abs(d[i]), equal += std::abs(y) == std::abs(d[i]);
      rank[i] = less + (equal + 1) / 2;
    }
    double w = 0, total = 0;
    for (std::size_t i = 0; i < d.size(); ++i) total += rank[i], w += d[i] > 0 ? rank[i] : 0;
    double dev = std::abs(w - total / 2), hits = 0;
    for (std::uint32_t mask = 0; mask < (1u << d.size()); ++mask) {
      double s = 0;
      for (std::size_t i = 0; i < d.size(); ++i)
        if (mask >> i & 1) s += rank[i];
      hits += std::abs(s - total / 2) >= dev - 1e-9;
    }
    EXPECT_TRUE(r.exact);
    EXPECT_DOUBLE_EQ(r.w_plus, w);
    EXPECT_NEAR(r.p_value, std::min(1.0, hits / std::ldexp(1.0, d.size())), 1e-12);
  }
  EXPECT_EQ(kind_of([] { signed_rank_median(std::vector<double>{0, 0, 0}); }), ErrorKind::degenerate);
}

TEST(SignedRank, NormalApproximationForLargeSamples) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.3, 1);
  std::vector<double> v(400);
  for (double& x : v) x = z(rng);
  auto r = signed_rank_median(v);
  EXPECT_FALSE(r.exact);
  EXPECT_GT(r.statistic, 2);
  EXPECT_TRUE(r.significant());
}

TEST(Quantiles, TypeSevenAndWinsor) {
  std::vector<double> v = {10, 1, 4, 7};
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 10);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 5.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 3.25);  // h = 0.75 between 1 and 4
  EXPECT_EQ(kind_of([&] { quantile(v, 1.5); }), ErrorKind::domain);

  std::vector<double> w(101);
  for (int i = 0; i <= 100; ++i) w[i] = i;
  w[100] = 1e9;
  auto c = winsorize(w, 0.01);
  EXPECT_DOUBLE_EQ(c[0], 1.0);
  EXPECT_DOUBLE_EQ(c[100], 99.0);
  EXPECT_DOUBLE_EQ(c[50], 50.0);
  EXPECT_EQ(kind_of([&] { winsorize(w, 0.5); }), ErrorKind::domain);
  EXPECT_TRUE(winsorize({}, 0.01).empty());
}

TEST(Quantiles, ClippingWithFixedBoundsIsIdempotent) {
  std::mt19937_64 rng(6);
  std::lognormal_distribution<double> d(0, 1.5);
  std::vector<double> v(997);
  for (double& x : v) x = d(rng);
  auto b = winsor_bounds(v, 0.01);
  auto once = clip(v, b);
  EXPECT_EQ(clip(once, b), once);
  EXPECT_DOUBLE_EQ(*std::max_element(once.begin(), once.end()), quantile(v, 0.99));
  EXPECT_DOUBLE_EQ(*std::min_element(once.begin(), once.end()), quantile(v, 0.01));
  // Recomputing type-7 bounds on clipped data may move them, so plain
  // winsorize is not idempotent in general; it only gets closer.
  auto twice = winsorize(once, 0.01);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LE(std::abs(twice[i] - once[i]), std::abs(once[i] - v[i]) + 1e-12);
}

TEST(Stars, Thresholds) {
  EXPECT_EQ(significance_stars(0.009), "***");
  EXPECT_EQ(significance_stars(0.01), "**");
  EXPECT_EQ(significance_stars(0.049), "**");
  EXPECT_EQ(significance_stars(0.05), "*");
  EXPECT_EQ(significance_stars(0.1), "");
}
