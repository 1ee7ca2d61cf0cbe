#include "patent/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "patent/delimited.hpp"
#include "patent/error.hpp"

namespace patent {

namespace {

struct Row {
  std::size_t index;  // into corpus.applications
  double target;      // label or raw target before transform
};

// Why a record cannot enter this task, or empty if it can.
std::string exclusion_reason(const ApplicationRecord& r, const RollingConfig& c, const EmbeddingTable& emb,
                             std::size_t i) {
  if (!r.accepted.has_value()) return "pending";
  if (r.firm_id.empty()) return "unassigned";
  if (r.cpc.empty()) return "no_cpc";
  if (!(r.market_cap_musd > 0)) return "no_market_cap";
  if (c.task == PredictionTask::value) {
    if (*r.accepted != true) return "not_granted";
    if (!r.raw_value_musd) return "no_value";
    if (c.variant != Variant::no_embedding && c.value_text == TextSource::grant && !emb.has_grant(i)) {
      return "no_grant_text";
    }
  }
  return {};
}

std::span<const float> text_embedding(const RollingConfig& c, const EmbeddingTable& emb, std::size_t i) {
  if (c.variant == Variant::no_embedding) return {};
  if (c.task == PredictionTask::value && c.value_text == TextSource::grant) return emb.grant(i);
  return emb.application(i);
}

Matrix feature_matrix(const Corpus& corpus, const EmbeddingTable& emb, const RollingConfig& c,
                      const FeatureLayout& layout, std::span<const Row> rows, double default_ln_cap) {
  Matrix X(rows.size(), layout.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& rec = corpus.applications[rows[r].index];
    assemble_features(layout, text_embedding(c, emb, rows[r].index), StructuralInput::from_record(rec),
                      default_ln_cap, X.row(r));
  }
  return X;
}

ClassificationReport classification_from_json(const nlohmann::json& j) {
  ClassificationReport r;
  r.auc = j.at("auc").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  r.recall = j.at("recall").get<double>();
  if (!j.at("precision").is_null()) r.precision = j.at("precision").get<double>();
  if (!j.at("f1").is_null()) r.f1 = j.at("f1").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.n = j.at("n").get<std::size_t>();
  r.tp = j.at("tp").get<std::size_t>();
  r.fp = j.at("fp").get<std::size_t>();
  r.tn = j.at("tn").get<std::size_t>();
  r.fn = j.at("fn").get<std::size_t>();
  return r;
}

RegressionReport regression_from_json(const nlohmann::json& j) {
  RegressionReport r;
  r.mse = j.at("mse").get<double>();
  r.r2 = j.at("r2").get<double>();
  if (!j.at("adj_r2").is_null()) r.adj_r2 = j.at("adj_r2").get<double>();
  r.n = j.at("n").get<std::size_t>();
  r.p = j.at("p").get<std::size_t>();
  return r;
}

}  // namespace

nlohmann::json RollingConfig::to_json() const {
  return {{"task", patent::to_string(task)},
          {"variant", patent::to_string(variant)},
          {"first_test_year", first_test_year},
          {"last_test_year", last_test_year},
          {"window_years", window_years},
          {"model", model},
          {"transform", patent::to_string(transform)},
          {"value_text", patent::to_string(value_text)},
          {"threshold", threshold},
          {"min_train_records", min_train_records}};
}

RollingConfig RollingConfig::from_json(const nlohmann::json& j) {
  RollingConfig c;
  c.task = parse_prediction_task(j.value("task", patent::to_string(c.task)));
  c.variant = parse_variant(j.value("variant", patent::to_string(c.variant)));
  c.first_test_year = j.value("first_test_year", c.first_test_year);
  c.last_test_year = j.value("last_test_year", c.last_test_year);
  c.window_years = j.value("window_years", c.window_years);
  if (j.contains("model")) c.model = j.at("model").get<MLPConfig>();
  c.transform = parse_transform_kind(j.value("transform", patent::to_string(c.transform)));
  c.value_text = parse_text_source(j.value("value_text", patent::to_string(c.value_text)));
  c.threshold = j.value("threshold", c.threshold);
  c.min_train_records = j.value("min_train_records", c.min_train_records);
  return c;
}

std::string RollingResult::name() const {
  return fmt::format("{}_{}", to_string(config.task), to_string(config.variant));
}

nlohmann::json RollingResult::manifest() const {
  nlohmann::json evals = nlohmann::json::array();
  for (const auto& e : evaluations) {
    nlohmann::json row = {{"year", e.year},
                          {"n_train", e.n_train},
                          {"n_test", e.n_test},
                          {"train_years", e.train_years},
                          {"min_train_publication_year", e.min_train_publication_year},
                          {"max_train_publication_year", e.max_train_publication_year},
                          {"transform", e.transform.to_json()},
                          {"loss_trace", e.loss_trace}};
    if (e.classification) row["metrics"] = to_json(*e.classification);
    if (e.regression) row["metrics"] = to_json(*e.regression);
    evals.push_back(std::move(row));
  }
  nlohmann::json skips = nlohmann::json::array();
  for (const auto& s : skipped) skips.push_back({{"year", s.year}, {"reason", s.reason}});
  nlohmann::json j = {{"name", name()},
                      {"config", config.to_json()},
                      {"evaluations", evals},
                      {"skipped", skips},
                      {"exclusions", exclusions}};
  return j;
}

TextTable RollingResult::table() const {
  if (config.task == PredictionTask::acceptance) {
    std::vector<LabelledClassification> rows;
    for (const auto& e : evaluations) rows.push_back({std::to_string(e.year), *e.classification});
    return classification_table(rows);
  }
  std::vector<LabelledRegression> rows;
  for (const auto& e : evaluations) rows.push_back({std::to_string(e.year), *e.regression});
  return regression_table(rows);
}

RollingResult rolling_run(const Corpus& corpus, const EmbeddingTable& embeddings, const RollingConfig& config) {
  if (config.window_years < 1) fail(ErrorKind::config, "window_years must be at least 1");
  if (config.last_test_year < config.first_test_year) fail(ErrorKind::config, "test year range is empty");
  if (config.variant != Variant::no_embedding && embeddings.size() != corpus.applications.size()) {
    fail(ErrorKind::shape, fmt::format("embedding table has {} rows for {} applications", embeddings.size(),
                                       corpus.applications.size()));
  }
  RollingResult result;
  result.config = config;
  const FeatureLayout layout = FeatureLayout::make(config.task, config.variant);

  // Eligible rows grouped by publication year.
  std::map<int, std::vector<Row>> by_year;
  for (std::size_t i = 0; i < corpus.applications.size(); ++i) {
    const auto& r = corpus.applications[i];
    std::string why = exclusion_reason(r, config, embeddings, i);
    if (!why.empty()) {
      ++result.exclusions[why];
      continue;
    }
    double target = config.task == PredictionTask::acceptance ? (*r.accepted ? 1.0 : 0.0)
                                                               : *r.raw_value_musd / r.market_cap_musd;
    by_year[r.publication_year()].push_back({i, target});
  }

  for (int year = config.first_test_year; year <= config.last_test_year; ++year) {
    auto skip = [&](const std::string& reason) { result.skipped.push_back({year, reason}); };
    std::vector<Row> train;
    std::vector<int> window;
    std::string missing;
    for (int y = year - config.window_years; y < year; ++y) {
      window.push_back(y);
      auto it = by_year.find(y);
      if (it == by_year.end() || it->second.empty()) {
        missing += (missing.empty() ? "" : ", ") + std::to_string(y);
        continue;
      }
      train.insert(train.end(), it->second.begin(), it->second.end());
    }
    if (!missing.empty()) {
      skip(fmt::format("insufficient window data: no eligible records in {}", missing));
      continue;
    }
    if (train.size() < config.min_train_records) {
      skip(fmt::format("insufficient window data: {} training records, need {}", train.size(), config.min_train_records));
      continue;
    }
    auto test_it = by_year.find(year);
    if (test_it == by_year.end() || test_it->second.empty()) {
      skip("no eligible records in the test year");
      continue;
    }
    std::vector<Row> test = test_it->second;

    // Targets and the train-only transform.
    TargetTransform transform;
    std::vector<double> y_train, y_test;
    for (const auto& r : train) y_train.push_back(r.target);
    if (config.task == PredictionTask::value) {
      transform = TargetTransform::fit(config.transform, y_train);
      y_train = transform.apply(y_train);
      std::vector<Row> kept;
      for (const auto& r : test) {
        try {
          y_test.push_back(transform.apply(r.target));
          kept.push_back(r);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::domain) throw;
          ++result.exclusions["test_target_outside_transform_domain"];
        }
      }
      test = std::move(kept);
      if (test.size() < 2) {
        skip(fmt::format("test year has {} usable records", test.size()));
        continue;
      }
    } else {
      for (const auto& r : test) y_test.push_back(r.target);
      const bool both = std::any_of(y_test.begin(), y_test.end(), [](double v) { return v == 1.0; }) &&
                        std::any_of(y_test.begin(), y_test.end(), [](double v) { return v == 0.0; });
      const bool both_train = std::any_of(y_train.begin(), y_train.end(), [](double v) { return v == 1.0; }) &&
                              std::any_of(y_train.begin(), y_train.end(), [](double v) { return v == 0.0; });
      if (!both || !both_train) {
        skip("a single outcome class in the training window or test year");
        continue;
      }
    }

    std::vector<double> ln_caps;
    for (const auto& r : train) ln_caps.push_back(std::log(corpus.applications[r.index].market_cap_musd));
    const double default_ln_cap = median(ln_caps);

    Matrix X_train = feature_matrix(corpus, embeddings, config, layout, train, default_ln_cap);
    Matrix X_test = feature_matrix(corpus, embeddings, config, layout, test, default_ln_cap);
    FeatureScaler scaler = FeatureScaler::fit(X_train);
    scaler.apply(X_train);
    scaler.apply(X_test);

    MLPConfig mc = config.model;
    mc.input_dim = layout.size();
    mc.task = config.task == PredictionTask::acceptance ? Task::binary : Task::regression;
    mc.seed = config.model.seed + static_cast<std::uint64_t>(year);
    // Regression targets are centred and scaled on the training rows so the
    // output layer starts near the right level.
    double center = 0.0, spread = 1.0;
    if (config.task == PredictionTask::value) {
      center = mean(y_train);
      double ss = 0;
      for (double v : y_train) ss += (v - center) * (v - center);
      spread = std::sqrt(ss / static_cast<double>(y_train.size()));
      if (!(spread > 0)) spread = 1.0;
      for (double& v : y_train) v = (v - center) / spread;
    }
    TrainResult trained = patent::train(MLPModel(mc), X_train, y_train);
    auto unscale = [&](std::vector<double> v) {
      if (config.task == PredictionTask::value) {
        for (double& x : v) x = center + spread * x;
      }
      return v;
    };
    std::vector<double> pred = unscale(trained.model.predict(X_test));

    YearlyEvaluation ev;
    ev.year = year;
    ev.task = config.task;
    ev.variant = config.variant;
    ev.n_train = train.size();
    ev.n_test = test.size();
    ev.train_years = window;
    ev.min_train_publication_year = year;
    ev.max_train_publication_year = 0;
    for (const auto& r : train) {
      int py = corpus.applications[r.index].publication_year();
      ev.min_train_publication_year = std::min(ev.min_train_publication_year, py);
      ev.max_train_publication_year = std::max(ev.max_train_publication_year, py);
    }
    ev.transform = transform;
    ev.loss_trace = trained.loss_trace;
    if (config.task == PredictionTask::acceptance) {
      ev.classification = classification_report(pred, y_test, config.threshold);
    } else {
      ev.regression = regression_report(pred, y_test, layout.size());
    }
    result.evaluations.push_back(std::move(ev));

    for (std::size_t r = 0; r < test.size(); ++r) {
      result.predictions.push_back({corpus.applications[test[r].index].app_id, year, pred[r], y_test[r]});
    }

    ModelBundle bundle;
    bundle.vintage = year;
    bundle.train_years = window;
    bundle.layout = layout;
    bundle.text_source = config.task == PredictionTask::value ? config.value_text : TextSource::application;
    bundle.scaler = std::move(scaler);
    bundle.transform = transform;
    bundle.default_ln_cap = default_ln_cap;
    bundle.target_center = center;
    bundle.target_scale = spread;
    bundle.training_quantiles = percentile_grid(unscale(trained.model.predict(X_train)));
    bundle.model = std::move(trained.model);
    result.models.push_back(std::move(bundle));
  }
  return result;
}

std::string predictions_tsv(std::span<const Prediction> predictions) {
  std::ostringstream out;
  const Dialect tab{'\t'};
  std::vector<std::string> header = {"app_id", "year", "prediction", "target"};
  write_record(out, header, tab);
  for (const auto& p : predictions) {
    std::vector<std::string> f = {p.app_id, std::to_string(p.year), format_double(p.prediction),
                                  format_double(p.target)};
    write_record(out, f, tab);
  }
  return out.str();
}

std::vector<Prediction> parse_predictions(const std::string& tsv) {
  DelimitedTable table(DelimitedReader(tsv, Dialect{'\t'}));
  constexpr std::string_view cols[] = {"app_id", "year", "prediction", "target"};
  table.require(cols);
  std::vector<Prediction> out;
  while (table.next()) {
    out.push_back({table.get("app_id"), static_cast<int>(table.get_int("year")), table.get_double("prediction"),
                   table.get_double("target")});
  }
  return out;
}

std::vector<LabelledClassification> classification_rows(const nlohmann::json& manifest) {
  std::vector<LabelledClassification> rows;
  for (const auto& e : manifest.at("evaluations")) {
    rows.push_back({std::to_string(e.at("year").get<int>()), classification_from_json(e.at("metrics"))});
  }
  return rows;
}

std::vector<LabelledRegression> regression_rows(const nlohmann::json& manifest) {
  std::vector<LabelledRegression> rows;
  for (const auto& e : manifest.at("evaluations")) {
    rows.push_back({std::to_string(e.at("year").get<int>()), regression_from_json(e.at("metrics"))});
  }
  return rows;
}

std::vector<BucketReport> bucket_analysis(std::span<const Prediction> predictions,
                                          std::span<const std::size_t> cutoffs) {
  std::map<int, std::vector<const Prediction*>> by_year;
  for (const auto& p : predictions) by_year[p.year].push_back(&p);
  for (auto& [year, list] : by_year) {
    std::sort(list.begin(), list.end(), [](const Prediction* a, const Prediction* b) {
      if (a->prediction != b->prediction) return a->prediction > b->prediction;
      return a->app_id < b->app_id;
    });
  }
  std::vector<BucketReport> out;
  for (std::size_t k : cutoffs) {
    BucketReport b;
    b.cutoff = k;
    double top = 0, bottom = 0;
    for (const auto& [year, list] : by_year) {
      if (list.size() < k) {
        b.years_skipped.push_back(year);
        continue;
      }
      double t = 0, w = 0;
      for (std::size_t i = 0; i < k; ++i) {
        t += list[i]->target;
        w += list[list.size() - 1 - i]->target;
      }
      top += t / static_cast<double>(k);
      bottom += w / static_cast<double>(k);
      ++b.years_used;
    }
    if (b.years_used > 0) {
      b.top_acceptance_rate = top / static_cast<double>(b.years_used);
      b.bottom_acceptance_rate = bottom / static_cast<double>(b.years_used);
    } else {
      b.top_acceptance_rate = b.bottom_acceptance_rate = std::nan("");
    }
    out.push_back(std::move(b));
  }
  return out;
}

TextTable bucket_table(std::span<const BucketReport> full, std::span<const BucketReport> no_embedding) {
  if (full.size() != no_embedding.size()) fail(ErrorKind::shape, "bucket reports cover different cutoffs");
  TextTable t;
  t.header = {"Yearly Cutoff", "Best: Full Model", "Best: No Embedding", "Best: Difference",
              "Worst: Full Model", "Worst: No Embedding", "Worst: Difference"};
  auto cell = [](double v) { return std::isnan(v) ? std::string("n/a") : percent(v); };
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto& a = full[i];
    const auto& b = no_embedding[i];
    t.rows.push_back({std::to_string(a.cutoff), cell(a.top_acceptance_rate), cell(b.top_acceptance_rate),
                      cell(a.top_acceptance_rate - b.top_acceptance_rate), cell(a.bottom_acceptance_rate),
                      cell(b.bottom_acceptance_rate), cell(a.bottom_acceptance_rate - b.bottom_acceptance_rate)});
  }
  return t;
}

TextTable classification_comparison(
    std::span<const std::pair<std::string, std::vector<ClassificationReport>>> models) {
  TextTable t;
  t.header = {"Model", "Statistic", "AUC", "F1 Score", "Accuracy", "Precision", "Recall"};
  auto cell = [](double v) { return std::isnan(v) ? std::string("n/a") : percent(v); };
  for (const auto& [label, reports] : models) {
    if (reports.empty()) continue;
    auto add = [&](const std::string& first, const std::string& stat, const ClassificationSummary& s) {
      t.rows.push_back({first, stat, cell(s.auc), cell(s.f1), cell(s.accuracy), cell(s.precision), cell(s.recall)});
    };
    add(label, "Mean", mean_of(reports));
    add("", "Median", median_of(reports));
  }
  return t;
}

TextTable regression_comparison(std::span<const std::pair<std::string, std::vector<RegressionReport>>> models) {
  TextTable t;
  t.header = {"Model", "Statistic", "MSE", "R^2", "Adj. R^2"};
  for (const auto& [label, reports] : models) {
    if (reports.empty()) continue;
    auto add = [&](const std::string& first, const std::string& stat, const RegressionSummary& s) {
      t.rows.push_back({first, stat, fixed(s.mse, 2), percent(s.r2), std::isnan(s.adj_r2) ? "n/a" : percent(s.adj_r2)});
    };
    add(label, "Mean", mean_of(reports));
    add("", "Median", median_of(reports));
  }
  return t;
}

std::map<std::string, double> application_quality(const Corpus& corpus, const EmbeddingTable& embeddings,
                                                  RollingConfig config) {
  config.task = PredictionTask::acceptance;
  config.variant = Variant::embedding_only;
  RollingResult run = rolling_run(corpus, embeddings, config);
  std::map<std::string, double> quality;
  for (const auto& p : run.predictions) quality[p.app_id] = p.prediction;
  return quality;
}

QualityPanel build_quality_panel(const Corpus& corpus, const std::map<std::string, double>& quality,
                                 const Deflator& deflator) {
  QualityPanel panel;
  panel.control_names = {"cpc_A", "cpc_B", "cpc_C", "cpc_D", "cpc_E", "cpc_F", "cpc_G", "cpc_H", "cpc_Y",
                         "is_ict", "is_biotech", "is_hightech", "is_research_institution"};
  auto months = application_months_by_firm(corpus.applications);
  std::unordered_map<std::string, const FirmRecord*> firms;
  for (const auto& f : corpus.firms) firms[f.firm_id] = &f;

  std::vector<std::array<double, 3>> cov;
  std::vector<std::vector<double>> ctl;
  for (const auto& r : corpus.applications) {
    auto q = quality.find(r.app_id);
    if (q == quality.end()) continue;
    auto f = firms.find(r.firm_id);
    if (f == firms.end()) {
      ++panel.dropped_missing_cap;
      continue;
    }
    FirmCovariates c;
    try {
      c = firm_covariates(*f->second, r.filing_date.to_month(), months[r.firm_id], deflator);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::missing_covariate) throw;
      ++panel.dropped_missing_cap;
      continue;
    }
    cov.push_back({c.size_ln, c.age_years, static_cast<double>(c.application_stock)});
    std::vector<double> controls;
    for (char s : kCpcSections) controls.push_back(r.cpc.contains(s) ? 1.0 : 0.0);
    controls.insert(controls.end(), {static_cast<double>(r.is_ict), static_cast<double>(r.is_biotech),
                                     static_cast<double>(r.is_hightech),
                                     static_cast<double>(r.is_research_institution)});
    ctl.push_back(std::move(controls));
    panel.quality.push_back(q->second);
    panel.firm_ids.push_back(r.firm_id);
  }
  panel.covariates = Matrix(cov.size(), 3);
  panel.controls = Matrix(ctl.size(), panel.control_names.size());
  for (std::size_t i = 0; i < cov.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) panel.covariates(i, j) = cov[i][j];
    for (std::size_t j = 0; j < panel.control_names.size(); ++j) panel.controls(i, j) = ctl[i][j];
  }
  return panel;
}

QualityRegressions quality_regressions(const QualityPanel& panel) {
  static const std::vector<std::string> kNames = {"size_ln", "age_years", "application_stock"};
  QualityRegressions out;
  auto columns = [&](std::span<const std::size_t> cov_cols, std::span<const std::size_t> ctl_cols) {
    Matrix X(panel.quality.size(), cov_cols.size() + ctl_cols.size());
    std::vector<std::string> names;
    for (auto c : cov_cols) names.push_back(kNames[c]);
    for (auto c : ctl_cols) names.push_back(panel.control_names[c]);
    for (std::size_t i = 0; i < X.rows(); ++i) {
      std::size_t at = 0;
      for (auto c : cov_cols) X(i, at++) = panel.covariates(i, c);
      for (auto c : ctl_cols) X(i, at++) = panel.controls(i, c);
    }
    return fe_panel(X, panel.quality, panel.firm_ids, names);
  };
  const std::size_t single[3][1] = {{0}, {1}, {2}};
  const std::size_t all[] = {0, 1, 2};
  for (const auto& s : single) out.columns.push_back(columns(s, {}));
  out.columns.push_back(columns(all, {}));

  // Controls that never vary within a firm are absorbed by the firm effects.
  std::vector<std::size_t> usable;
  for (std::size_t c = 0; c < panel.control_names.size(); ++c) {
    std::unordered_map<std::string, double> first;
    bool varies = false;
    for (std::size_t i = 0; i < panel.quality.size() && !varies; ++i) {
      auto [it, inserted] = first.emplace(panel.firm_ids[i], panel.controls(i, c));
      if (!inserted && it->second != panel.controls(i, c)) varies = true;
    }
    if (varies) usable.push_back(c);
    else out.dropped_controls.push_back(panel.control_names[c]);
  }
  out.columns.push_back(columns(all, usable));
  return out;
}

TextTable quality_table(const QualityRegressions& regs) {
  TextTable t;
  t.header = {"", "(1)", "(2)", "(3)", "(4)", "(5)"};
  auto cell = [](const RegressionResult& r, std::string_view name) -> std::string {
    auto it = std::find(r.names.begin(), r.names.end(), name);
    if (it == r.names.end()) return "";
    std::size_t i = static_cast<std::size_t>(it - r.names.begin());
    double p = two_tailed_p(r.t_stats[i], static_cast<double>(r.df_resid));
    return fmt::format("{:.3f}{} ({:.2f})", r.coefficients[i], significance_stars(p), r.t_stats[i]);
  };
  const std::pair<const char*, const char*> rows[] = {{"Firm Size", "size_ln"},
                                                      {"Firm Age", "age_years"},
                                                      {"Application Stock", "application_stock"},
                                                      {"Constant", "const"}};
  for (const auto& [label, name] : rows) {
    std::vector<std::string> row = {label};
    for (const auto& r : regs.columns) row.push_back(cell(r, name));
    t.rows.push_back(std::move(row));
  }
  std::vector<std::string> controls = {"Patent Controls"}, fe = {"Firm Fixed Effects"}, obs = {"Observations"},
                           adj = {"Adjusted R-squared"};
  for (std::size_t c = 0; c < regs.columns.size(); ++c) {
    controls.push_back(c == 4 ? "Yes" : "No");
    fe.push_back("Yes");
    obs.push_back(std::to_string(regs.columns[c].n));
    adj.push_back(fmt::format("{:.3f}", regs.columns[c].adj_r2));
  }
  t.rows.push_back(controls);
  t.rows.push_back(fe);
  t.rows.push_back(obs);
  t.rows.push_back(adj);
  return t;
}

}  // namespace patent
