#include "patent/screening.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "patent/delimited.hpp"
#include "patent/error.hpp"
#include "patent/metrics.hpp"

namespace patent {

ScreeningIndex::ScreeningIndex(const Corpus& corpus, const EmbeddingTable& embeddings)
    : corpus_(&corpus), embeddings_(&embeddings) {
  if (embeddings.size() != corpus.applications.size()) {
    fail(ErrorKind::shape, "embedding table does not cover the corpus");
  }
  for (std::size_t i = 0; i < corpus.applications.size(); ++i) index_.emplace(corpus.applications[i].app_id, i);
}

std::size_t ScreeningIndex::position(const std::string& app_id) const {
  auto it = index_.find(app_id);
  if (it == index_.end()) fail(ErrorKind::not_found, fmt::format("application '{}' is not in the corpus", app_id));
  return it->second;
}

bool ScreeningIndex::accepted(const std::string& app_id) const {
  return corpus_->applications[position(app_id)].accepted.value_or(false);
}

std::optional<double> ScreeningIndex::grant_distance(const std::string& app_id) const {
  std::size_t i = position(app_id);
  if (!embeddings_->has_grant(i)) return std::nullopt;
  return cosine_distance(embeddings_->application(i), embeddings_->grant(i));
}

std::vector<std::string> filter_accepted(std::span<const std::string> ids, const ScreeningIndex& index) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    if (index.accepted(id)) out.push_back(id);
  }
  return out;
}

std::vector<std::string> filter_changed(std::span<const std::string> ids, const ScreeningIndex& index,
                                        double threshold, std::size_t* missing) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    auto d = index.grant_distance(id);
    if (!d) {
      if (missing) ++*missing;
      continue;
    }
    if (*d >= threshold) out.push_back(id);
  }
  return out;
}

std::vector<ScreeningCohort> build_cohorts(std::span<const Prediction> predictions, const ScreeningIndex& index,
                                           const ScreeningConfig& config) {
  if (config.worst_k == 0) fail(ErrorKind::config, "worst_k must be positive");
  if (!(config.threshold >= 0.0)) fail(ErrorKind::config, "screening threshold must be nonnegative");
  std::map<int, std::vector<const Prediction*>> by_year;
  for (const auto& p : predictions) by_year[p.year].push_back(&p);

  std::vector<ScreeningCohort> out;
  for (auto& [year, list] : by_year) {
    std::sort(list.begin(), list.end(), [](const Prediction* a, const Prediction* b) {
      if (a->prediction != b->prediction) return a->prediction < b->prediction;
      return a->app_id < b->app_id;
    });
    ScreeningCohort c;
    c.year = year;
    c.worst_k = config.worst_k;
    c.threshold = config.threshold;
    for (std::size_t i = 0; i < std::min(config.worst_k, list.size()); ++i) c.members.push_back(list[i]->app_id);
    c.accepted_subset = filter_accepted(c.members, index);
    c.changed_subset = filter_changed(c.accepted_subset, index, config.threshold, &c.missing_grant_text);
    for (const auto& id : c.changed_subset) c.changed_distances.push_back(*index.grant_distance(id));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ImprovementRow> rescore_changed(std::span<const ScreeningCohort> cohorts, const Corpus& corpus,
                                            const EmbeddingTable& embeddings, const ScreeningIndex& index,
                                            std::span<const ModelBundle> models) {
  std::vector<ImprovementRow> rows;
  for (const auto& c : cohorts) {
    auto m = std::find_if(models.begin(), models.end(), [&](const ModelBundle& b) { return b.vintage == c.year; });
    if (m == models.end()) {
      fail(ErrorKind::not_ready, fmt::format("no acceptance model for {} to rescore grant text", c.year));
    }
    if (m->layout.task != PredictionTask::acceptance) fail(ErrorKind::usage, "rescoring needs an acceptance model");
    for (const auto& id : c.changed_subset) {
      std::size_t i = index.position(id);
      StructuralInput s = StructuralInput::from_record(corpus.applications[i]);
      ImprovementRow r;
      r.app_id = id;
      r.year = c.year;
      r.p_application = m->predict(embeddings.application(i), s);
      r.p_grant = m->predict(embeddings.grant(i), s);
      r.improvement = r.p_grant - r.p_application;
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

ImprovementAnalysis improvement_analysis(std::vector<ImprovementRow> rows) {
  ImprovementAnalysis a;
  a.rows = std::move(rows);
  a.empty = a.rows.empty();
  if (a.empty) {
    a.note = "no changed applications";
    return a;
  }
  std::vector<double> d;
  for (const auto& r : a.rows) d.push_back(r.improvement);
  try {
    a.mean_test = t_test_mean(d);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate && e.kind() != ErrorKind::domain) throw;
    a.note = e.what();
  }
  try {
    a.median_test = signed_rank_median(d);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate && e.kind() != ErrorKind::domain) throw;
    if (a.note.empty()) a.note = e.what();
  }
  return a;
}

namespace {

std::vector<std::string> describe(const std::string& label, std::span<const double> v) {
  if (v.empty()) return {label, "n/a", "n/a", "n/a", "n/a", "n/a", "n/a", "n/a", "0"};
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  std::string sd = v.size() > 1 ? fixed(std::sqrt(ss / static_cast<double>(v.size() - 1)), 3) : "n/a";
  return {label,
          fixed(m, 3),
          sd,
          fixed(s.front(), 3),
          fixed(quantile_sorted(s, 0.25), 3),
          fixed(quantile_sorted(s, 0.5), 3),
          fixed(quantile_sorted(s, 0.75), 3),
          fixed(s.back(), 3),
          std::to_string(v.size())};
}

}  // namespace

TextTable improvement_table(const ImprovementAnalysis& a) {
  TextTable t;
  t.header = {"", "Mean", "SD", "Min.", "25 Pct.", "Median", "75 Pct.", "Max.", "N"};
  std::vector<double> app, grant, imp;
  for (const auto& r : a.rows) {
    app.push_back(r.p_application);
    grant.push_back(r.p_grant);
    imp.push_back(r.improvement);
  }
  t.rows.push_back(describe("Application Text", app));
  t.rows.push_back(describe("Patent Text", grant));
  auto row = describe("Improvement", imp);
  std::vector<std::string> tests = {"(t)", "", "", "", "", "", "", "", ""};
  if (a.mean_test) {
    row[1] += significance_stars(a.mean_test->p_value);
    tests[1] = fmt::format("({:.2f})", a.mean_test->t_stat);
  }
  if (a.median_test) {
    row[5] += significance_stars(a.median_test->p_value);
    tests[5] = fmt::format("({:.2f})", a.median_test->statistic);
  }
  t.rows.push_back(row);
  t.rows.push_back(tests);
  return t;
}

std::string improvement_rows_tsv(std::span<const ImprovementRow> rows) {
  std::ostringstream out;
  const Dialect tab{'\t'};
  const std::vector<std::string> header = {"app_id", "year", "p_application", "p_grant", "improvement"};
  write_record(out, header, tab);
  for (const auto& r : rows) {
    std::vector<std::string> f = {r.app_id, std::to_string(r.year), format_double(r.p_application),
                                  format_double(r.p_grant), format_double(r.improvement)};
    write_record(out, f, tab);
  }
  return out.str();
}

TextTable cohort_table(std::span<const ScreeningCohort> cohorts) {
  TextTable t;
  t.header = {"Year", "Worst", "Accepted", "Changed", "Missing Grant Text", "Threshold"};
  for (const auto& c : cohorts) {
    t.rows.push_back({std::to_string(c.year), std::to_string(c.members.size()), std::to_string(c.accepted_subset.size()),
                      std::to_string(c.changed_subset.size()), std::to_string(c.missing_grant_text),
                      fixed(c.threshold, 2)});
  }
  return t;
}

RevisionScore score_revision(const ModelBundle* model, EmbeddingProvider& provider, const std::string& title,
                             const std::string& abstract, const std::optional<Embedding>& previous,
                             const StructuralInput& structural) {
  if (model == nullptr) fail(ErrorKind::not_ready, "no acceptance model is loaded");
  if (model->layout.task != PredictionTask::acceptance) fail(ErrorKind::usage, "revision scoring needs an acceptance model");
  Embedding e = provider.embed(EmbedRequest::from_parts(title, abstract));
  RevisionScore r{model->predict(e.values(), structural), std::nullopt, e};
  if (previous) r.distance_from_previous = cosine_distance(*previous, e);
  return r;
}

}  // namespace patent
