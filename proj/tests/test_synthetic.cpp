#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "patent/error.hpp"
#include "patent/synthetic.hpp"

using namespace patent;

namespace {

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Synthetic, SameSeedSameCorpus) {
  SyntheticConfig cfg;
  cfg.n_apps = 500;
  cfg.n_firms = 25;
  auto a = generate_synthetic(cfg);
  auto b = generate_synthetic(cfg);
  EXPECT_EQ(a.corpus.applications, b.corpus.applications);
  EXPECT_EQ(a.corpus.firms, b.corpus.firms);
  EXPECT_EQ(a.corpus.factors, b.corpus.factors);
  cfg.seed = 2;
  EXPECT_NE(generate_synthetic(cfg).corpus.applications, a.corpus.applications);
}

TEST(Synthetic, MarginalsAndInvariants) {
  SyntheticConfig cfg;
  cfg.n_apps = 6000;
  auto s = generate_synthetic(cfg);
  const auto& apps = s.corpus.applications;
  ASSERT_EQ(apps.size(), cfg.n_apps);
  std::size_t accepted = 0, rewritten = 0;
  for (std::size_t i = 0; i < apps.size(); ++i) {
    const auto& r = apps[i];
    ASSERT_TRUE(r.accepted.has_value());
    EXPECT_LE(r.filing_date, r.publication_date);
    EXPECT_GE(r.publication_year(), cfg.first_year);
    EXPECT_LE(r.publication_year(), cfg.last_year);
    EXPECT_NE(s.corpus.find_firm(r.firm_id), nullptr);
    EXPECT_GT(r.market_cap_musd, 0);
    if (*r.accepted) {
      ++accepted;
      EXPECT_TRUE(r.has_grant_text());
      EXPECT_TRUE(r.raw_value_musd.has_value());
      if (s.grant_rewritten[i]) ++rewritten;
    } else {
      EXPECT_FALSE(r.has_grant_text());
      EXPECT_FALSE(s.grant_rewritten[i]);
    }
  }
  double rate = static_cast<double>(accepted) / apps.size();
  EXPECT_NEAR(rate, cfg.target_acceptance_rate, 0.03);
  EXPECT_NEAR(static_cast<double>(rewritten) / accepted, cfg.rewrite_fraction, 0.02);
}

TEST(Synthetic, TextEncodesLatentQuality) {
  SyntheticConfig cfg;
  cfg.n_apps = 3000;
  auto s = generate_synthetic(cfg);
  std::vector<double> idx;
  for (const auto& r : s.corpus.applications) idx.push_back(text_quality_index(r.abstract));
  EXPECT_GT(correlation(idx, s.latent_quality), 0.6);
  EXPECT_DOUBLE_EQ(text_quality_index("nothing to see"), 0.5);
  auto base = s.corpus.applications[0].abstract;
  EXPECT_GT(text_quality_index(strengthen_text(base, 20)), text_quality_index(base));
}

TEST(Synthetic, ValidateRejectsNonsense) {
  SyntheticConfig cfg;
  cfg.target_acceptance_rate = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.first_year = 2010;
  cfg.last_year = 2005;
  EXPECT_THROW(generate_synthetic(cfg), Error);
  cfg = {};
  cfg.n_firms = 0;
  EXPECT_THROW(cfg.validate(), Error);
}
