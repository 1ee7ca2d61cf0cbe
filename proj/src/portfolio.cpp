#include "patent/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "patent/delimited.hpp"
#include "patent/error.hpp"
#include "patent/stats.hpp"

namespace patent {

double application_strength(std::span<const double> p_hats) {
  if (p_hats.empty()) fail(ErrorKind::usage, "application strength of an empty month");
  double sum = 0;
  for (double p : p_hats) sum += p;
  const double n = static_cast<double>(p_hats.size());
  return sum / n * std::sqrt(n);
}

std::vector<FirmMonth> build_panel(std::span<const Prediction> predictions, const Corpus& corpus) {
  std::unordered_map<std::string, const ApplicationRecord*> apps;
  for (const auto& r : corpus.applications) apps.emplace(r.app_id, &r);
  std::map<std::pair<Month, std::string>, std::vector<double>> groups;
  for (const auto& p : predictions) {
    auto it = apps.find(p.app_id);
    if (it == apps.end()) fail(ErrorKind::not_found, fmt::format("prediction for unknown application '{}'", p.app_id));
    const ApplicationRecord& r = *it->second;
    if (r.firm_id.empty()) continue;
    groups[{r.publication_date.to_month(), r.firm_id}].push_back(p.prediction);
  }
  std::vector<FirmMonth> panel;
  for (const auto& [key, ps] : groups) {
    FirmMonth row;
    row.month = key.first;
    row.firm_id = key.second;
    row.n_apps = ps.size();
    double sum = 0;
    for (double p : ps) sum += p;
    row.mean_p = sum / static_cast<double>(ps.size());
    row.strength = application_strength(ps);
    if (const FirmRecord* f = corpus.find_firm(row.firm_id)) {
      auto r = f->monthly_returns.find(row.month.next());
      if (r != f->monthly_returns.end()) row.next_month_return = r->second;
    }
    panel.push_back(std::move(row));
  }
  return panel;
}

std::vector<Month> PortfolioSeries::holding_months() const {
  std::vector<Month> out;
  for (const auto& m : months) out.push_back(m.holding);
  return out;
}
std::vector<double> PortfolioSeries::long_returns() const {
  std::vector<double> out;
  for (const auto& m : months) out.push_back(m.long_return);
  return out;
}
std::vector<double> PortfolioSeries::short_returns() const {
  std::vector<double> out;
  for (const auto& m : months) out.push_back(m.short_return);
  return out;
}
std::vector<double> PortfolioSeries::long_short_returns() const {
  std::vector<double> out;
  for (const auto& m : months) out.push_back(m.long_short);
  return out;
}

PortfolioSeries build_portfolio(std::span<const FirmMonth> panel, const PortfolioConfig& config) {
  if (config.min_firms < 2) fail(ErrorKind::config, "a median split needs min_firms of at least 2");
  std::map<Month, std::vector<const FirmMonth*>> by_month;
  for (const auto& row : panel) {
    if (row.next_month_return) by_month[row.month].push_back(&row);
  }
  PortfolioSeries out;
  for (auto& [month, rows] : by_month) {
    if (rows.size() < config.min_firms) {
      out.skipped.emplace_back(month, fmt::format("{} firms, need {}", rows.size(), config.min_firms));
      continue;
    }
    std::sort(rows.begin(), rows.end(), [](const FirmMonth* a, const FirmMonth* b) {
      if (a->strength != b->strength) return a->strength < b->strength;
      return a->firm_id < b->firm_id;
    });
    const std::size_t n_short = rows.size() / 2;
    PortfolioMonth pm;
    pm.formation = month;
    pm.holding = month.next();
    double s = 0, l = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) (i < n_short ? s : l) += *rows[i]->next_month_return;
    pm.n_short = n_short;
    pm.n_long = rows.size() - n_short;
    pm.short_return = s / static_cast<double>(pm.n_short);
    pm.long_return = l / static_cast<double>(pm.n_long);
    pm.long_short = pm.long_return - pm.short_return;
    out.months.push_back(pm);
  }
  return out;
}

std::string to_string(FactorModel model) {
  switch (model) {
    case FactorModel::ff3: return "FF3";
    case FactorModel::ff4: return "FF4";
    case FactorModel::ff5: return "FF5";
  }
  return "FF3";
}

std::vector<std::string> factor_names(FactorModel model) {
  switch (model) {
    case FactorModel::ff3: return {"mkt_rf", "smb", "hml"};
    case FactorModel::ff4: return {"mkt_rf", "smb", "hml", "mom"};
    case FactorModel::ff5: return {"mkt_rf", "smb", "hml", "rmw", "cma"};
  }
  return {};
}

namespace {

double factor_value(const FactorRow& f, const std::string& name) {
  if (name == "mkt_rf") return f.mkt_rf;
  if (name == "smb") return f.smb;
  if (name == "hml") return f.hml;
  if (name == "mom") return f.mom;
  if (name == "rmw") return f.rmw;
  return f.cma;
}

}  // namespace

AlphaResult factor_alpha(std::span<const Month> months, std::span<const double> returns,
                         const FactorSeries& factors, FactorModel model, bool excess) {
  if (months.size() != returns.size()) fail(ErrorKind::shape, "months and returns differ in length");
  if (months.size() < kMinAlphaMonths) {
    fail(ErrorKind::coverage, fmt::format("alpha needs at least {} months, got {}", kMinAlphaMonths, months.size()));
  }
  AlphaResult out;
  out.model = model;
  out.factor_names = factor_names(model);
  out.n_months = months.size();
  Matrix X(months.size(), out.factor_names.size());
  std::vector<double> y(months.size());
  for (std::size_t t = 0; t < months.size(); ++t) {
    auto it = factors.rows.find(months[t]);
    if (it == factors.rows.end()) fail(ErrorKind::coverage, fmt::format("no factor returns for {}", months[t].str()));
    for (std::size_t k = 0; k < out.factor_names.size(); ++k) X(t, k) = factor_value(it->second, out.factor_names[k]);
    y[t] = returns[t] - (excess ? it->second.rf : 0.0);
  }
  RegressionResult r = ols(X, y, true, out.factor_names);
  out.alpha_monthly = r.coef("const");
  out.t_stat = r.t("const");
  out.p_one_tailed = one_tailed_p(out.t_stat, static_cast<double>(r.df_resid));
  out.annualized = 12.0 * out.alpha_monthly;
  for (const auto& name : out.factor_names) out.betas.push_back(r.coef(name));
  return out;
}

BacktestResult backtest(std::span<const FirmMonth> panel, const FactorSeries& factors, const PortfolioConfig& config) {
  BacktestResult out;
  out.series = build_portfolio(panel, config);
  const auto months = out.series.holding_months();
  const std::vector<double> legs[] = {out.series.short_returns(), out.series.long_returns(),
                                      out.series.long_short_returns()};
  for (std::size_t leg = 0; leg < 3; ++leg) {
    std::vector<AlphaResult> row;
    for (FactorModel m : kFactorModels) row.push_back(factor_alpha(months, legs[leg], factors, m, leg < 2));
    out.alphas.push_back(std::move(row));
  }
  return out;
}

TextTable alpha_table(const BacktestResult& result) {
  TextTable t;
  t.header = {""};
  for (FactorModel m : kFactorModels) t.header.push_back(to_string(m) + "-adjusted Return");
  const char* labels[] = {"Low", "High", "Long-Short"};
  for (std::size_t leg = 0; leg < result.alphas.size(); ++leg) {
    std::vector<std::string> row = {labels[leg]};
    for (const auto& a : result.alphas[leg]) {
      row.push_back(fmt::format("{:.3f}%{} ({:.2f})", 100.0 * a.alpha_monthly, significance_stars(a.p_one_tailed),
                                a.t_stat));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string series_tsv(const PortfolioSeries& series) {
  std::ostringstream out;
  const Dialect tab{'\t'};
  const std::vector<std::string> header = {"formation", "holding", "long_return", "short_return",
                                           "long_short", "n_long",  "n_short"};
  write_record(out, header, tab);
  for (const auto& m : series.months) {
    std::vector<std::string> f = {m.formation.str(),          m.holding.str(),          format_double(m.long_return),
                                  format_double(m.short_return), format_double(m.long_short), std::to_string(m.n_long),
                                  std::to_string(m.n_short)};
    write_record(out, f, tab);
  }
  return out.str();
}

std::string panel_tsv(std::span<const FirmMonth> panel) {
  std::ostringstream out;
  const Dialect tab{'\t'};
  const std::vector<std::string> header = {"firm_id", "month", "n_apps", "mean_p", "application_strength",
                                           "next_month_return"};
  write_record(out, header, tab);
  for (const auto& r : panel) {
    std::vector<std::string> f = {r.firm_id,
                                  r.month.str(),
                                  std::to_string(r.n_apps),
                                  format_double(r.mean_p),
                                  format_double(r.strength),
                                  r.next_month_return ? format_double(*r.next_month_return) : std::string()};
    write_record(out, f, tab);
  }
  return out.str();
}

PlantedPanel simulate_planted_panel(const PlantedPanelConfig& config) {
  if (config.n_firms < 4 || config.months < kMinAlphaMonths + 1) {
    fail(ErrorKind::config, "planted panel needs at least 4 firms and 37 months");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PlantedPanel out;
  const Month first{2000, 1};
  // One extra month so the last formation month has a holding month.
  for (std::size_t t = 0; t <= config.months; ++t) {
    FactorRow f;
    f.mkt_rf = 0.006 + 0.045 * normal(rng);
    f.smb = 0.002 + 0.03 * normal(rng);
    f.hml = 0.002 + 0.03 * normal(rng);
    f.mom = 0.005 + 0.04 * normal(rng);
    f.rmw = 0.003 + 0.02 * normal(rng);
    f.cma = 0.002 + 0.02 * normal(rng);
    f.rf = 0.0015 + 0.0005 * unif(rng);
    out.factors.rows.emplace(Month::from_index(first.index() + static_cast<int>(t)), f);
  }
  struct Loadings {
    double mkt, smb, hml;
  };
  std::vector<Loadings> beta(config.n_firms);
  std::vector<std::string> ids(config.n_firms);
  for (std::size_t f = 0; f < config.n_firms; ++f) {
    beta[f] = {0.6 + 0.8 * unif(rng), -0.5 + unif(rng), -0.5 + unif(rng)};
    ids[f] = fmt::format("P{:05d}", f);
  }
  std::vector<double> strength(config.n_firms);
  std::vector<std::size_t> order(config.n_firms);
  for (std::size_t t = 0; t < config.months; ++t) {
    const Month formation = Month::from_index(first.index() + static_cast<int>(t));
    const FactorRow& fr = out.factors.rows.at(formation.next());
    for (auto& s : strength) s = unif(rng);
    for (std::size_t f = 0; f < config.n_firms; ++f) order[f] = f;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return strength[a] < strength[b] || (strength[a] == strength[b] && ids[a] < ids[b]);
    });
    std::vector<bool> high(config.n_firms, false);
    for (std::size_t k = config.n_firms / 2; k < config.n_firms; ++k) high[order[k]] = true;
    for (std::size_t f = 0; f < config.n_firms; ++f) {
      FirmMonth row;
      row.firm_id = ids[f];
      row.month = formation;
      row.n_apps = 1;
      row.mean_p = strength[f];
      row.strength = strength[f];
      double r = fr.rf + beta[f].mkt * fr.mkt_rf + beta[f].smb * fr.smb + beta[f].hml * fr.hml +
                 config.idiosyncratic_sd * normal(rng);
      if (high[f]) r += config.alpha;
      row.next_month_return = r;
      out.panel.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace patent
