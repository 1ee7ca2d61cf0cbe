#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "patent/error.hpp"
#include "patent/screening.hpp"
#include "patent/synthetic.hpp"

using namespace patent;

namespace {

struct World {
  SyntheticCorpus synth;
  EmbeddingTable embeddings;
  std::vector<std::string> accepted_ids;
  std::set<std::string> rewritten;
};

const World& world() {
  static const World w = [] {
    SyntheticConfig cfg;
    cfg.n_apps = 2000;
    cfg.n_firms = 30;
    cfg.first_year = 2001;
    cfg.last_year = 2005;
    cfg.rewrite_fraction = 0.2;
    cfg.seed = 8;
    World out{generate_synthetic(cfg), {}, {}, {}};
    MockEmbeddingProvider mock;
    out.embeddings = EmbeddingTable::build(
        out.synth.corpus.applications, [&](const std::string& t) { return mock.embed(EmbedRequest(t)); }, true);
    const auto& apps = out.synth.corpus.applications;
    for (std::size_t i = 0; i < apps.size(); ++i) {
      if (apps[i].accepted == true) out.accepted_ids.push_back(apps[i].app_id);
      if (out.synth.grant_rewritten[i]) out.rewritten.insert(apps[i].app_id);
    }
    return out;
  }();
  return w;
}

std::vector<std::string> all_ids(const Corpus& c) {
  std::vector<std::string> ids;
  for (const auto& r : c.applications) ids.push_back(r.app_id);
  return ids;
}

}  // namespace

TEST(Screening, RecoversPlantedRewritesAtDefaultThreshold) {
  const auto& w = world();
  ScreeningIndex index(w.synth.corpus, w.embeddings);
  ASSERT_GT(w.rewritten.size(), 50u);
  auto changed = filter_changed(w.accepted_ids, index, 0.05);
  EXPECT_EQ(std::set<std::string>(changed.begin(), changed.end()), w.rewritten);
  for (const auto& id : w.accepted_ids) {
    if (!w.rewritten.count(id)) {
      EXPECT_EQ(index.grant_distance(id), 0.0) << id;
    }
  }
}

TEST(Screening, HigherThresholdKeepsASubset) {
  const auto& w = world();
  ScreeningIndex index(w.synth.corpus, w.embeddings);
  std::vector<std::string> prev;
  for (double thr : {0.0, 0.02, 0.05, 0.1, 0.2, 0.5}) {
    auto cur = filter_changed(w.accepted_ids, index, thr);
    if (thr > 0) {
      std::set<std::string> prev_set(prev.begin(), prev.end());
      for (const auto& id : cur) EXPECT_TRUE(prev_set.count(id)) << thr;
    }
    prev = cur;
  }
}

TEST(Screening, FiltersCommute) {
  const auto& w = world();
  ScreeningIndex index(w.synth.corpus, w.embeddings);
  auto ids = all_ids(w.synth.corpus);
  std::size_t missing_a = 0, missing_b = 0;
  auto a = filter_changed(filter_accepted(ids, index), index, 0.05, &missing_a);
  auto b = filter_accepted(filter_changed(ids, index, 0.05, &missing_b), index);
  EXPECT_EQ(a, b);
  EXPECT_EQ(missing_a, 0u);  // every accepted synthetic record has grant text
  EXPECT_EQ(missing_b, ids.size() - w.accepted_ids.size());
  EXPECT_THROW(index.position("nope"), Error);
}

TEST(Screening, CohortsTakeLowestPredictions) {
  const auto& w = world();
  ScreeningIndex index(w.synth.corpus, w.embeddings);
  std::vector<Prediction> preds;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  for (const auto& r : w.synth.corpus.applications) {
    if (r.publication_year() >= 2004) preds.push_back({r.app_id, r.publication_year(), u(rng), r.accepted == true ? 1.0 : 0.0});
  }
  ScreeningConfig cfg{50, 0.05};
  auto cohorts = build_cohorts(preds, index, cfg);
  ASSERT_EQ(cohorts.size(), 2u);
  for (const auto& c : cohorts) {
    ASSERT_EQ(c.members.size(), 50u);
    std::vector<double> year_preds;
    for (const auto& p : preds)
      if (p.year == c.year) year_preds.push_back(p.prediction);
    std::sort(year_preds.begin(), year_preds.end());
    std::map<std::string, double> by_id;
    for (const auto& p : preds) by_id[p.app_id] = p.prediction;
    for (const auto& id : c.members) EXPECT_LE(by_id[id], year_preds[49]);
    EXPECT_EQ(c.accepted_subset, filter_accepted(c.members, index));
    EXPECT_EQ(c.changed_subset, filter_changed(c.accepted_subset, index, 0.05));
    ASSERT_EQ(c.changed_distances.size(), c.changed_subset.size());
    for (double d : c.changed_distances) EXPECT_GE(d, 0.05);
  }
  auto t = cohort_table(cohorts);
  EXPECT_EQ(t.header[0], "Year");
  EXPECT_EQ(t.rows[0][1], "50");
  EXPECT_THROW(build_cohorts(preds, index, ScreeningConfig{0, 0.05}), Error);
}

TEST(Screening, PlantedImprovementIsDetected) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0, 0.1);
  std::uniform_real_distribution<double> u(0.05, 0.4);
  std::vector<ImprovementRow> rows;
  for (int i = 0; i < 200; ++i) {
    double pa = u(rng), pg = pa + 0.1 + noise(rng);
    rows.push_back({std::to_string(i), 2004, pa, pg, pg - pa});
  }
  auto a = improvement_analysis(rows);
  ASSERT_TRUE(a.mean_test.has_value());
  EXPECT_GE(a.mean_test->mean, 0.07);
  EXPECT_LE(a.mean_test->mean, 0.13);
  EXPECT_GT(a.mean_test->t_stat, 2);
  ASSERT_TRUE(a.median_test.has_value());
  EXPECT_TRUE(a.median_test->significant());
  auto t = improvement_table(a);
  EXPECT_EQ(t.rows[0][0], "Application Text");
  EXPECT_EQ(t.rows[2][0], "Improvement");
  EXPECT_NE(t.rows[2][1].find("***"), std::string::npos);
  EXPECT_EQ(t.rows[3][0], "(t)");
}

TEST(Screening, DegenerateImprovementsAreNoted) {
  std::vector<ImprovementRow> rows = {{"a", 2004, 0.2, 0.2, 0}, {"b", 2004, 0.3, 0.3, 0}};
  auto a = improvement_analysis(rows);
  EXPECT_FALSE(a.mean_test.has_value());
  EXPECT_FALSE(a.median_test.has_value());
  EXPECT_FALSE(a.note.empty());
  EXPECT_NO_THROW(improvement_table(a).render());
  auto none = improvement_analysis({});
  EXPECT_TRUE(none.empty);
}

TEST(Screening, RescoreUsesSameYearModel) {
  const auto& w = world();
  RollingConfig cfg;
  cfg.first_test_year = cfg.last_test_year = 2004;
  cfg.model.hidden_dims = {8};
  cfg.model.epochs = 2;
  cfg.model.dropout_rate = 0;
  auto run = rolling_run(w.synth.corpus, w.embeddings, cfg);
  ScreeningIndex index(w.synth.corpus, w.embeddings);
  auto cohorts = build_cohorts(run.predictions, index, ScreeningConfig{300, 0.05});
  ASSERT_FALSE(cohorts.at(0).changed_subset.empty());
  auto rows = rescore_changed(cohorts, w.synth.corpus, w.embeddings, index, run.models);
  ASSERT_EQ(rows.size(), cohorts[0].changed_subset.size());
  const auto& m = run.models[0];
  for (const auto& r : rows) {
    std::size_t i = index.position(r.app_id);
    auto s = StructuralInput::from_record(w.synth.corpus.applications[i]);
    EXPECT_DOUBLE_EQ(r.p_application, m.predict(w.embeddings.application(i), s));
    EXPECT_DOUBLE_EQ(r.p_grant, m.predict(w.embeddings.grant(i), s));
    EXPECT_DOUBLE_EQ(r.improvement, r.p_grant - r.p_application);
  }
  try {
    rescore_changed(cohorts, w.synth.corpus, w.embeddings, index, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_ready);
  }
}

TEST(Screening, ScoreRevision) {
  const auto& w = world();
  RollingConfig cfg;
  cfg.first_test_year = cfg.last_test_year = 2004;
  cfg.model.hidden_dims = {8};
  cfg.model.epochs = 2;
  auto run = rolling_run(w.synth.corpus, w.embeddings, cfg);
  MockEmbeddingProvider mock;
  try {
    score_revision(nullptr, mock, "t", "a");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_ready);
  }
  auto first = score_revision(&run.models[0], mock, "Sensor", "A sensor array.");
  EXPECT_FALSE(first.distance_from_previous.has_value());
  EXPECT_GT(first.p_hat, 0);
  EXPECT_LT(first.p_hat, 1);
  auto same = score_revision(&run.models[0], mock, "Sensor", "A sensor array.", first.embedding);
  EXPECT_EQ(same.distance_from_previous, 0.0);
  EXPECT_EQ(same.p_hat, first.p_hat);
  auto moved = score_revision(&run.models[0], mock, "Sensor", "A calibrated sensor array.", first.embedding);
  EXPECT_GT(*moved.distance_from_previous, 0.0);

  RollingConfig vcfg = cfg;
  vcfg.task = PredictionTask::value;
  auto vrun = rolling_run(w.synth.corpus, w.embeddings, vcfg);
  try {
    score_revision(&vrun.models[0], mock, "t", "a");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::usage);
  }
}
