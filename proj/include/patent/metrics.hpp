#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "patent/report.hpp"

namespace patent {

// Mann-Whitney statistic with midranks: Pr(s+ > s-) + Pr(tie)/2.
// Labels are 0/1; undefined_metric error unless both classes are present.
double auc(std::span<const double> scores, std::span<const double> labels);
// O(n^2) pair count of the same quantity, kept as the oracle for `auc`.
double auc_pairwise(std::span<const double> scores, std::span<const double> labels);

double f1_score(double precision, double recall);

struct ClassificationReport {
  double auc = 0;
  double accuracy = 0;
  // Undefined when nothing is predicted positive; never reported as 0.
  std::optional<double> precision;
  double recall = 0;
  std::optional<double> f1;
  double threshold = 0.5;
  std::size_t n = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  bool precision_undefined() const { return !precision.has_value(); }
};

ClassificationReport classification_report(std::span<const double> scores, std::span<const double> labels,
                                           double threshold = 0.5);

struct RegressionReport {
  double mse = 0;
  double r2 = 0;
  // Undefined when n <= p + 1, which is common with embedding-sized p.
  std::optional<double> adj_r2;
  std::size_t n = 0;
  std::size_t p = 0;
};

double adjusted_r2(double r2, std::size_t n, std::size_t p);

RegressionReport regression_report(std::span<const double> predictions, std::span<const double> targets,
                                   std::size_t p);

nlohmann::json to_json(const ClassificationReport& r);
nlohmann::json to_json(const RegressionReport& r);

// Table-shaped summaries: a row per labelled report plus Mean and Median rows.
struct LabelledClassification {
  std::string label;
  ClassificationReport report;
};
struct LabelledRegression {
  std::string label;
  RegressionReport report;
};

// Mean and median of each statistic over rows; undefined precision/F1 rows are
// left out of those two statistics.
struct ClassificationSummary {
  double auc, f1, accuracy, precision, recall;
};
struct RegressionSummary {
  double mse, r2, adj_r2;
};
ClassificationSummary mean_of(std::span<const ClassificationReport> reports);
ClassificationSummary median_of(std::span<const ClassificationReport> reports);
RegressionSummary mean_of(std::span<const RegressionReport> reports);
RegressionSummary median_of(std::span<const RegressionReport> reports);

// Year | AUC | F1 Score | Accuracy | Precision | Recall, then Mean and Median.
TextTable classification_table(std::span<const LabelledClassification> rows);
// Year | MSE | R^2 | Adj. R^2, then Mean and Median.
TextTable regression_table(std::span<const LabelledRegression> rows);

double median(std::vector<double> values);
double mean(std::span<const double> values);

}  // namespace patent
