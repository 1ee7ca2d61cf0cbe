#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "patent/report.hpp"

namespace patent {

inline constexpr double kKpssAcceptance = 0.55;
inline constexpr double kAdjustedAcceptance = 0.724;
// p_hat is clamped here before the factor so one near-certain prediction
// cannot dominate the summaries.
inline constexpr double kMinPHat = 0.001;
inline constexpr double kMaxPHat = 0.99;

// 1 / (1 - p). Domain error for p outside [0, 1).
double scaling_factor(double p);

// Undo the constant KPSS factor on a published KPSS value.
double raw_reaction_from_kpss(double kpss_value_musd, double kpss_p = kKpssAcceptance);

struct ValuationInput {
  std::string id;
  double p_hat = 0;
  std::optional<double> raw_reaction_musd;  // absent: only the scale ratios are reported
};

struct ValuationConfig {
  double kpss_p = kKpssAcceptance;
  double adjusted_p = kAdjustedAcceptance;
  double winsor_pct = 0.01;
};

struct ValuationRecord {
  std::string id;
  double p_hat = 0;
  double p_used = 0;  // after clamping
  bool clamped = false;
  double factor = 0;             // 1 / (1 - p_used)
  double factor_winsorized = 0;  // pooled winsorization over the sample
  double raw_scale_ratio = 0;    // factor / KPSS factor, before winsorization
  double scale_ratio = 0;        // winsorized factor / KPSS factor
  double scale_ratio_adj = 0;    // winsorized factor / adjusted KPSS factor
  std::optional<double> raw_reaction_musd;
  std::optional<double> kpss_value_musd;
  std::optional<double> adj_kpss_value_musd;
  std::optional<double> ai_value_musd;  // winsorized
};

struct SummaryRow {
  std::string label;
  double mean = 0, sd = 0, p10 = 0, p25 = 0, p50 = 0, p75 = 0, p90 = 0;
  std::size_t n = 0;
};

// Mean, sample SD and type-7 percentiles; NaN statistics when values is empty.
SummaryRow summarize(std::string label, std::span<const double> values);

struct ValuationResult {
  std::vector<ValuationRecord> records;
  std::vector<SummaryRow> summary;
  bool empty = false;

  // Mean | SD | 10 Pct. | 25 Pct. | Median | 75 Pct. | 90 Pct. | N
  TextTable table() const;
  std::string records_tsv() const;
};

ValuationResult revalue(std::span<const ValuationInput> inputs, const ValuationConfig& config = {});

}  // namespace patent
