#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "patent/corpus.hpp"
#include "patent/features.hpp"
#include "patent/metrics.hpp"
#include "patent/neuralnet.hpp"
#include "patent/report.hpp"
#include "patent/scoring.hpp"
#include "patent/stats.hpp"
#include "patent/transforms.hpp"

namespace patent {

struct RollingConfig {
  PredictionTask task = PredictionTask::acceptance;
  Variant variant = Variant::full;
  int first_test_year = 2004;
  int last_test_year = 2004;
  int window_years = 3;
  // input_dim and task are filled in per run; seed is offset by the test year.
  MLPConfig model;
  TransformKind transform = TransformKind::boxcox;
  TextSource value_text = TextSource::grant;
  double threshold = 0.5;
  std::size_t min_train_records = 50;

  nlohmann::json to_json() const;
  static RollingConfig from_json(const nlohmann::json& j);
};

struct Prediction {
  std::string app_id;
  int year = 0;
  double prediction = 0;  // probability, or value in transformed units
  double target = 0;      // label, or transformed target
};

struct YearlyEvaluation {
  int year = 0;
  PredictionTask task = PredictionTask::acceptance;
  Variant variant = Variant::full;
  std::optional<ClassificationReport> classification;
  std::optional<RegressionReport> regression;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<int> train_years;
  // Publication-year range of the rows actually used for training.
  int min_train_publication_year = 0;
  int max_train_publication_year = 0;
  TargetTransform transform;
  std::vector<double> loss_trace;
};

struct SkipNote {
  int year = 0;
  std::string reason;
};

struct RollingResult {
  RollingConfig config;
  std::vector<YearlyEvaluation> evaluations;
  std::vector<Prediction> predictions;
  std::vector<SkipNote> skipped;
  std::vector<ModelBundle> models;
  std::map<std::string, std::size_t> exclusions;  // reason -> record count

  std::string name() const;  // e.g. "acceptance_full"
  nlohmann::json manifest() const;
  TextTable table() const;
};

// Trains one model per test year on the `window_years` publication years before
// it and evaluates it on the test year. Years without enough data are skipped
// and listed, never silently dropped.
RollingResult rolling_run(const Corpus& corpus, const EmbeddingTable& embeddings, const RollingConfig& config);

std::string predictions_tsv(std::span<const Prediction> predictions);
std::vector<Prediction> parse_predictions(const std::string& tsv);

// Evaluation rows rebuilt from a stored manifest (for report regeneration).
std::vector<LabelledClassification> classification_rows(const nlohmann::json& manifest);
std::vector<LabelledRegression> regression_rows(const nlohmann::json& manifest);

struct BucketReport {
  std::size_t cutoff = 0;
  double top_acceptance_rate = 0;
  double bottom_acceptance_rate = 0;
  std::size_t years_used = 0;
  std::vector<int> years_skipped;
};

// Per year: realized acceptance among the k highest and k lowest predictions,
// averaged over years. Years with fewer than k predictions skip that cutoff.
inline constexpr std::size_t kDefaultCutoffs[] = {100, 250, 500, 1000};
std::vector<BucketReport> bucket_analysis(std::span<const Prediction> predictions,
                                          std::span<const std::size_t> cutoffs = kDefaultCutoffs);

// Best/worst table comparing the full model with the no-embedding benchmark.
TextTable bucket_table(std::span<const BucketReport> full, std::span<const BucketReport> no_embedding);

// Model comparison: mean and median rows per model.
TextTable classification_comparison(std::span<const std::pair<std::string, std::vector<ClassificationReport>>> models);
TextTable regression_comparison(std::span<const std::pair<std::string, std::vector<RegressionReport>>> models);

// Application quality = predicted acceptance from the embedding-only model.
std::map<std::string, double> application_quality(const Corpus& corpus, const EmbeddingTable& embeddings,
                                                  RollingConfig config);

struct QualityPanel {
  Matrix covariates;  // size_ln, age_years, application_stock
  Matrix controls;
  std::vector<std::string> control_names;
  std::vector<double> quality;
  std::vector<std::string> firm_ids;
  std::size_t dropped_missing_cap = 0;
};

// Covariates measured at each application's filing month.
QualityPanel build_quality_panel(const Corpus& corpus, const std::map<std::string, double>& quality,
                                 const Deflator& deflator = {});

struct QualityRegressions {
  std::vector<RegressionResult> columns;  // (1) size, (2) age, (3) stock, (4) all, (5) all + controls
  std::vector<std::string> dropped_controls;
};

QualityRegressions quality_regressions(const QualityPanel& panel);
TextTable quality_table(const QualityRegressions& regs);

}  // namespace patent
