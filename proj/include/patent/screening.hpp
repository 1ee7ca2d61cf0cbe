#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "patent/corpus.hpp"
#include "patent/embedding.hpp"
#include "patent/features.hpp"
#include "patent/pipeline.hpp"
#include "patent/report.hpp"
#include "patent/scoring.hpp"
#include "patent/stats.hpp"

namespace patent {

struct ScreeningConfig {
  std::size_t worst_k = 500;
  double threshold = 0.05;  // minimum cosine distance between application and grant text
};

struct ScreeningCohort {
  int year = 0;
  std::size_t worst_k = 0;
  double threshold = 0;
  std::vector<std::string> members;  // lowest predictions first
  std::vector<std::string> accepted_subset;
  std::vector<std::string> changed_subset;
  std::vector<double> changed_distances;  // aligned with changed_subset
  std::size_t missing_grant_text = 0;     // accepted members without grant text
};

// Lookups shared by the cohort filters.
class ScreeningIndex {
 public:
  ScreeningIndex(const Corpus& corpus, const EmbeddingTable& embeddings);

  bool accepted(const std::string& app_id) const;
  // Cosine distance between application and grant embeddings; nullopt when the
  // record has no grant text.
  std::optional<double> grant_distance(const std::string& app_id) const;
  std::size_t position(const std::string& app_id) const;  // not_found error if unknown

 private:
  const Corpus* corpus_;
  const EmbeddingTable* embeddings_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<std::string> filter_accepted(std::span<const std::string> ids, const ScreeningIndex& index);
// Keeps ids whose grant text moved at least `threshold` away; ids without grant
// text are dropped and counted in `missing`.
std::vector<std::string> filter_changed(std::span<const std::string> ids, const ScreeningIndex& index,
                                        double threshold, std::size_t* missing = nullptr);

// Per year: the worst_k lowest acceptance predictions, those later accepted,
// and of those the ones whose grant text changed by at least the threshold.
std::vector<ScreeningCohort> build_cohorts(std::span<const Prediction> predictions, const ScreeningIndex& index,
                                           const ScreeningConfig& config = {});

struct ImprovementRow {
  std::string app_id;
  int year = 0;
  double p_application = 0;
  double p_grant = 0;
  double improvement = 0;  // p_grant - p_application
};

// Rescores each changed member on its grant text with the same year's model and
// the application's structural features, so the delta isolates the text.
std::vector<ImprovementRow> rescore_changed(std::span<const ScreeningCohort> cohorts, const Corpus& corpus,
                                            const EmbeddingTable& embeddings, const ScreeningIndex& index,
                                            std::span<const ModelBundle> models);

struct ImprovementAnalysis {
  std::vector<ImprovementRow> rows;
  std::optional<MeanTest> mean_test;
  std::optional<SignedRankTest> median_test;
  bool empty = false;
  std::string note;  // why a test is missing
};

ImprovementAnalysis improvement_analysis(std::vector<ImprovementRow> rows);

// Mean | SD | Min. | 25 Pct. | Median | 75 Pct. | Max. | N for application
// text, patent text and the improvement, then the test statistics.
TextTable improvement_table(const ImprovementAnalysis& analysis);
std::string improvement_rows_tsv(std::span<const ImprovementRow> rows);
TextTable cohort_table(std::span<const ScreeningCohort> cohorts);

struct RevisionScore {
  double p_hat = 0;
  std::optional<double> distance_from_previous;
  Embedding embedding;
};

// Scores one draft with an acceptance model; structural fields take the
// bundle's defaults. `model` null means no model is loaded.
RevisionScore score_revision(const ModelBundle* model, EmbeddingProvider& provider, const std::string& title,
                             const std::string& abstract, const std::optional<Embedding>& previous = std::nullopt,
                             const StructuralInput& structural = {});

}  // namespace patent
