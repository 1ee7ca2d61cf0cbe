#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "patent/corpus.hpp"
#include "patent/pipeline.hpp"
#include "patent/report.hpp"

namespace patent {

// mean(p) * sqrt(count); usage error on an empty month.
double application_strength(std::span<const double> p_hats);

struct FirmMonth {
  std::string firm_id;
  Month month;  // publication month
  std::size_t n_apps = 0;
  double mean_p = 0;
  double strength = 0;
  std::optional<double> next_month_return;
};

// One row per firm and publication month with at least one prediction, sorted
// by (month, firm_id).
std::vector<FirmMonth> build_panel(std::span<const Prediction> predictions, const Corpus& corpus);

struct PortfolioConfig {
  std::size_t min_firms = 4;
};

struct PortfolioMonth {
  Month formation;
  Month holding;  // formation + 1; returns are realized here
  double long_return = 0;
  double short_return = 0;
  double long_short = 0;
  std::size_t n_long = 0;
  std::size_t n_short = 0;
};

struct PortfolioSeries {
  std::vector<PortfolioMonth> months;
  std::vector<std::pair<Month, std::string>> skipped;
  std::vector<Month> holding_months() const;
  std::vector<double> long_returns() const;
  std::vector<double> short_returns() const;
  std::vector<double> long_short_returns() const;
};

// Monthly equal-weighted median split on strength. Firms are ranked by
// (strength, firm_id); the lower floor(n/2) go short and the rest long, so an
// odd median firm goes long. Rows without a next-month return are left out.
PortfolioSeries build_portfolio(std::span<const FirmMonth> panel, const PortfolioConfig& config = {});

enum class FactorModel { ff3, ff4, ff5 };
std::string to_string(FactorModel model);
inline constexpr FactorModel kFactorModels[] = {FactorModel::ff3, FactorModel::ff4, FactorModel::ff5};
std::vector<std::string> factor_names(FactorModel model);

inline constexpr std::size_t kMinAlphaMonths = 36;

struct AlphaResult {
  FactorModel model = FactorModel::ff3;
  double alpha_monthly = 0;
  double t_stat = 0;
  double p_one_tailed = 0;
  double annualized = 0;  // 12 * monthly
  std::vector<std::string> factor_names;
  std::vector<double> betas;
  std::size_t n_months = 0;
};

// OLS of `returns` (minus rf when `excess`) on the model's factors with an
// intercept. Coverage error when a month has no factor row or when fewer than
// kMinAlphaMonths months are given.
AlphaResult factor_alpha(std::span<const Month> months, std::span<const double> returns,
                         const FactorSeries& factors, FactorModel model, bool excess);

struct BacktestResult {
  PortfolioSeries series;
  // [leg][model]: legs are low (short), high (long), long-short.
  std::vector<std::vector<AlphaResult>> alphas;
};

BacktestResult backtest(std::span<const FirmMonth> panel, const FactorSeries& factors,
                        const PortfolioConfig& config = {});

// Rows Low / High / Long-Short, one column per factor model, cells like
// "0.276%** (2.10)" with one-tailed stars.
TextTable alpha_table(const BacktestResult& result);
std::string series_tsv(const PortfolioSeries& series);
std::string panel_tsv(std::span<const FirmMonth> panel);

// Stand-alone planted-alpha world for checking the alpha machinery: firms with
// random factor loadings and random monthly strengths; firms above the median
// strength earn `alpha` extra the following month.
struct PlantedPanelConfig {
  std::size_t n_firms = 1000;
  std::size_t months = 240;
  double alpha = 0.003;
  double idiosyncratic_sd = 0.04;
  std::uint64_t seed = 1;
};

struct PlantedPanel {
  std::vector<FirmMonth> panel;
  FactorSeries factors;
};

PlantedPanel simulate_planted_panel(const PlantedPanelConfig& config);

}  // namespace patent
