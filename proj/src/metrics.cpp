#include "patent/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "patent/error.hpp"

namespace patent {

namespace {

void check_binary(std::span<const double> scores, std::span<const double> labels, std::size_t& pos,
                  std::size_t& neg) {
  if (scores.size() != labels.size()) {
    fail(ErrorKind::shape, fmt::format("{} scores but {} labels", scores.size(), labels.size()));
  }
  for (double s : scores) {
    if (std::isnan(s)) fail(ErrorKind::domain, "score is NaN");
  }
  pos = neg = 0;
  for (double l : labels) {
    if (l == 1.0) ++pos;
    else if (l == 0.0) ++neg;
    else fail(ErrorKind::domain, fmt::format("label {} is not 0 or 1", l));
  }
  if (pos == 0 || neg == 0) fail(ErrorKind::undefined_metric, "AUC needs both classes");
}

std::string optional_percent(const std::optional<double>& v) { return v ? percent(*v) : "n/a"; }

}  // namespace

double auc(std::span<const double> scores, std::span<const double> labels) {
  std::size_t pos = 0, neg = 0;
  check_binary(scores, labels, pos, neg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Positions i..j-1 share the midrank of 1-based ranks i+1..j.
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1.0) rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

double auc_pairwise(std::span<const double> scores, std::span<const double> labels) {
  std::size_t pos = 0, neg = 0;
  check_binary(scores, labels, pos, neg);
  double wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1.0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0.0) continue;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

double f1_score(double precision, double recall) {
  if (!(precision + recall > 0)) fail(ErrorKind::undefined_metric, "F1 undefined when precision and recall are 0");
  return 2.0 * precision * recall / (precision + recall);
}

ClassificationReport classification_report(std::span<const double> scores, std::span<const double> labels,
                                           double threshold) {
  ClassificationReport r;
  r.auc = auc(scores, labels);
  r.threshold = threshold;
  r.n = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1.0;
    if (predicted && actual) ++r.tp;
    else if (predicted) ++r.fp;
    else if (actual) ++r.fn;
    else ++r.tn;
  }
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(r.n);
  r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  if (r.tp + r.fp > 0) {
    r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
    if (*r.precision + r.recall > 0) r.f1 = f1_score(*r.precision, r.recall);
  }
  return r;
}

double adjusted_r2(double r2, std::size_t n, std::size_t p) {
  if (n <= p + 1) fail(ErrorKind::domain, fmt::format("adjusted R^2 needs n > p + 1 (n={}, p={})", n, p));
  return 1.0 - (1.0 - r2) * static_cast<double>(n - 1) / static_cast<double>(n - p - 1);
}

RegressionReport regression_report(std::span<const double> predictions, std::span<const double> targets,
                                   std::size_t p) {
  if (predictions.size() != targets.size()) {
    fail(ErrorKind::shape, fmt::format("{} predictions but {} targets", predictions.size(), targets.size()));
  }
  RegressionReport r;
  r.n = targets.size();
  r.p = p;
  if (r.n < 2) fail(ErrorKind::undefined_metric, "R^2 needs at least two targets");
  const double m = mean(targets);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < r.n; ++i) {
    ss_res += (predictions[i] - targets[i]) * (predictions[i] - targets[i]);
    ss_tot += (targets[i] - m) * (targets[i] - m);
  }
  if (!(ss_tot > 0)) fail(ErrorKind::undefined_metric, "R^2 undefined: targets have zero variance");
  r.mse = ss_res / static_cast<double>(r.n);
  r.r2 = 1.0 - ss_res / ss_tot;
  if (r.n > p + 1) r.adj_r2 = adjusted_r2(r.r2, r.n, p);
  return r;
}

nlohmann::json to_json(const ClassificationReport& r) {
  nlohmann::json j = {{"auc", r.auc},   {"accuracy", r.accuracy}, {"recall", r.recall},
                      {"threshold", r.threshold}, {"n", r.n}, {"tp", r.tp}, {"fp", r.fp},
                      {"tn", r.tn},     {"fn", r.fn}};
  j["precision"] = r.precision ? nlohmann::json(*r.precision) : nlohmann::json(nullptr);
  j["f1"] = r.f1 ? nlohmann::json(*r.f1) : nlohmann::json(nullptr);
  j["precision_undefined"] = r.precision_undefined();
  return j;
}

nlohmann::json to_json(const RegressionReport& r) {
  return {{"mse", r.mse}, {"r2", r.r2}, {"adj_r2", r.adj_r2 ? nlohmann::json(*r.adj_r2) : nlohmann::json(nullptr)}, {"n", r.n}, {"p", r.p}};
}

double mean(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::degenerate, "mean of an empty sample");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorKind::degenerate, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

template <typename Reduce>
ClassificationSummary summarize(std::span<const ClassificationReport> reports, Reduce reduce) {
  std::vector<double> a, f, acc, p, r;
  for (const auto& x : reports) {
    a.push_back(x.auc);
    acc.push_back(x.accuracy);
    r.push_back(x.recall);
    if (x.precision) p.push_back(*x.precision);
    if (x.f1) f.push_back(*x.f1);
  }
  auto safe = [&](std::vector<double>& v) { return v.empty() ? std::nan("") : reduce(v); };
  return {safe(a), safe(f), safe(acc), safe(p), safe(r)};
}

template <typename Reduce>
RegressionSummary summarize(std::span<const RegressionReport> reports, Reduce reduce) {
  std::vector<double> m, r, a;
  for (const auto& x : reports) {
    m.push_back(x.mse);
    r.push_back(x.r2);
    if (x.adj_r2) a.push_back(*x.adj_r2);
  }
  return {reduce(m), reduce(r), a.empty() ? std::nan("") : reduce(a)};
}

auto mean_reduce = [](std::vector<double>& v) { return mean(v); };
auto median_reduce = [](std::vector<double>& v) { return median(v); };

}  // namespace

ClassificationSummary mean_of(std::span<const ClassificationReport> reports) {
  return summarize(reports, mean_reduce);
}
ClassificationSummary median_of(std::span<const ClassificationReport> reports) {
  return summarize(reports, median_reduce);
}
RegressionSummary mean_of(std::span<const RegressionReport> reports) { return summarize(reports, mean_reduce); }
RegressionSummary median_of(std::span<const RegressionReport> reports) {
  return summarize(reports, median_reduce);
}

TextTable classification_table(std::span<const LabelledClassification> rows) {
  TextTable t;
  t.header = {"Year", "AUC", "F1 Score", "Accuracy", "Precision", "Recall"};
  std::vector<ClassificationReport> reports;
  for (const auto& row : rows) {
    const auto& r = row.report;
    t.rows.push_back({row.label, percent(r.auc), optional_percent(r.f1), percent(r.accuracy),
                      optional_percent(r.precision), percent(r.recall)});
    reports.push_back(r);
  }
  if (!reports.empty()) {
    auto add = [&](const std::string& label, const ClassificationSummary& s) {
      auto cell = [](double v) { return std::isnan(v) ? std::string("n/a") : percent(v); };
      t.rows.push_back({label, cell(s.auc), cell(s.f1), cell(s.accuracy), cell(s.precision), cell(s.recall)});
    };
    add("Mean", mean_of(reports));
    add("Median", median_of(reports));
  }
  return t;
}

TextTable regression_table(std::span<const LabelledRegression> rows) {
  TextTable t;
  t.header = {"Year", "MSE", "R^2", "Adj. R^2"};
  std::vector<RegressionReport> reports;
  for (const auto& row : rows) {
    t.rows.push_back({row.label, fixed(row.report.mse, 2), percent(row.report.r2),
                      optional_percent(row.report.adj_r2)});
    reports.push_back(row.report);
  }
  if (!reports.empty()) {
    auto add = [&](const std::string& label, const RegressionSummary& s) {
      t.rows.push_back({label, fixed(s.mse, 2), percent(s.r2), std::isnan(s.adj_r2) ? "n/a" : percent(s.adj_r2)});
    };
    add("Mean", mean_of(reports));
    add("Median", median_of(reports));
  }
  return t;
}

}  // namespace patent
