#include "patent/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "patent/delimited.hpp"
#include "patent/error.hpp"
#include "patent/metrics.hpp"
#include "patent/stats.hpp"

namespace patent {

double scaling_factor(double p) {
  if (!(p >= 0.0 && p < 1.0)) fail(ErrorKind::domain, fmt::format("scaling factor needs 0 <= p < 1, got {}", p));
  return 1.0 / (1.0 - p);
}

double raw_reaction_from_kpss(double kpss_value_musd, double kpss_p) {
  return kpss_value_musd / scaling_factor(kpss_p);
}

SummaryRow summarize(std::string label, std::span<const double> values) {
  SummaryRow row;
  row.label = std::move(label);
  row.n = values.size();
  if (values.empty()) {
    row.mean = row.sd = row.p10 = row.p25 = row.p50 = row.p75 = row.p90 = std::nan("");
    return row;
  }
  row.mean = mean(values);
  double ss = 0;
  for (double v : values) ss += (v - row.mean) * (v - row.mean);
  row.sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : std::nan("");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  row.p10 = quantile_sorted(sorted, 0.10);
  row.p25 = quantile_sorted(sorted, 0.25);
  row.p50 = quantile_sorted(sorted, 0.50);
  row.p75 = quantile_sorted(sorted, 0.75);
  row.p90 = quantile_sorted(sorted, 0.90);
  return row;
}

ValuationResult revalue(std::span<const ValuationInput> inputs, const ValuationConfig& config) {
  const double kpss_factor = scaling_factor(config.kpss_p);
  const double adj_factor = scaling_factor(config.adjusted_p);
  ValuationResult out;
  out.empty = inputs.empty();

  std::vector<double> factors;
  for (const auto& in : inputs) {
    if (!std::isfinite(in.p_hat) || in.p_hat < 0.0 || in.p_hat > 1.0) {
      fail(ErrorKind::domain, fmt::format("record '{}' has p_hat {} outside [0, 1]", in.id, in.p_hat));
    }
    if (in.raw_reaction_musd && !(*in.raw_reaction_musd >= 0.0)) {
      fail(ErrorKind::domain, fmt::format("record '{}' has a negative raw value", in.id));
    }
    ValuationRecord r;
    r.id = in.id;
    r.p_hat = in.p_hat;
    r.p_used = std::clamp(in.p_hat, kMinPHat, kMaxPHat);
    r.clamped = r.p_used != in.p_hat;
    r.factor = scaling_factor(r.p_used);
    r.raw_scale_ratio = r.factor / kpss_factor;
    r.raw_reaction_musd = in.raw_reaction_musd;
    factors.push_back(r.factor);
    out.records.push_back(std::move(r));
  }
  if (out.empty) return out;

  std::vector<double> wf = winsorize(factors, config.winsor_pct);
  std::vector<double> ai_raw;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    auto& r = out.records[i];
    r.factor_winsorized = wf[i];
    r.scale_ratio = wf[i] / kpss_factor;
    r.scale_ratio_adj = wf[i] / adj_factor;
    if (r.raw_reaction_musd) {
      r.kpss_value_musd = *r.raw_reaction_musd * kpss_factor;
      r.adj_kpss_value_musd = *r.raw_reaction_musd * adj_factor;
      ai_raw.push_back(*r.raw_reaction_musd * wf[i]);
    }
  }
  if (!ai_raw.empty()) {
    std::vector<double> ai = winsorize(ai_raw, config.winsor_pct);
    std::size_t k = 0;
    for (auto& r : out.records) {
      if (r.raw_reaction_musd) r.ai_value_musd = ai[k++];
    }
  }

  std::vector<double> ratio, ratio_adj, ai, kpss, adj, d_kpss, d_adj;
  for (const auto& r : out.records) {
    ratio.push_back(r.scale_ratio);
    ratio_adj.push_back(r.scale_ratio_adj);
    if (!r.ai_value_musd) continue;
    ai.push_back(*r.ai_value_musd);
    kpss.push_back(*r.kpss_value_musd);
    adj.push_back(*r.adj_kpss_value_musd);
    d_kpss.push_back(*r.ai_value_musd - *r.kpss_value_musd);
    d_adj.push_back(*r.ai_value_musd - *r.adj_kpss_value_musd);
  }
  out.summary = {summarize("AI Scale/ KPSS", ratio),
                 summarize("AI Scale/Adj. KPSS", ratio_adj),
                 summarize("AI Value", ai),
                 summarize("KPSS Value", kpss),
                 summarize("Adj. KPSS Value", adj),
                 summarize("AI Value - KPSS", d_kpss),
                 summarize("AI Value - Adj. KPSS", d_adj)};
  return out;
}

TextTable ValuationResult::table() const {
  TextTable t;
  t.header = {"", "Mean", "SD", "10 Pct.", "25 Pct.", "Median", "75 Pct.", "90 Pct.", "N"};
  auto cell = [](double v) { return std::isnan(v) ? std::string("n/a") : fixed(v, 2); };
  for (const auto& s : summary) {
    t.rows.push_back({s.label, cell(s.mean), cell(s.sd), cell(s.p10), cell(s.p25), cell(s.p50), cell(s.p75),
                      cell(s.p90), std::to_string(s.n)});
  }
  return t;
}

std::string ValuationResult::records_tsv() const {
  std::ostringstream out;
  const Dialect tab{'\t'};
  const std::vector<std::string> header = {"id",          "p_hat",           "p_used",        "clamped",
                                           "factor",      "factor_winsorized", "scale_ratio", "scale_ratio_adj",
                                           "raw_reaction_musd", "kpss_value_musd", "adj_kpss_value_musd",
                                           "ai_value_musd"};
  write_record(out, header, tab);
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : records) {
    std::vector<std::string> f = {r.id,
                                  format_double(r.p_hat),
                                  format_double(r.p_used),
                                  r.clamped ? "true" : "false",
                                  format_double(r.factor),
                                  format_double(r.factor_winsorized),
                                  format_double(r.scale_ratio),
                                  format_double(r.scale_ratio_adj),
                                  opt(r.raw_reaction_musd),
                                  opt(r.kpss_value_musd),
                                  opt(r.adj_kpss_value_musd),
                                  opt(r.ai_value_musd)};
    write_record(out, f, tab);
  }
  return out.str();
}

}  // namespace patent
