#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "patent/corpus.hpp"
#include "patent/features.hpp"
#include "patent/pipeline.hpp"
#include "patent/portfolio.hpp"
#include "patent/screening.hpp"
#include "patent/synthetic.hpp"
#include "patent/valuation.hpp"

namespace patent {

// One JSON manifest drives every CLI step. Unknown keys are config errors so
// typos do not silently fall back to defaults.
struct WorkflowConfig {
  std::uint64_t seed = 1;  // overrides synthetic.seed and the model seed
  std::filesystem::path out_dir = "run";
  SyntheticConfig synthetic;
  // External inputs; when unset, ingest reads what synth wrote.
  std::optional<std::filesystem::path> applications, firms, factors, deflator;
  std::string embedding_provider = "mock";  // or "remote" (EMBED_API_URL, EMBED_API_KEY)
  RollingConfig rolling;                    // task and variant are set per run
  ScreeningConfig screening;
  std::vector<double> screening_thresholds = {0.05, 0.02};
  ValuationConfig valuation;
  PortfolioConfig portfolio;

  static WorkflowConfig from_json(const nlohmann::json& j);
  static WorkflowConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

nlohmann::json synthetic_to_json(const SyntheticConfig& c);
SyntheticConfig synthetic_from_json(const nlohmann::json& j);

struct RunSpec {
  PredictionTask task;
  Variant variant;
};
// Every run `train` performs, in order.
std::vector<RunSpec> workflow_runs();

struct StepResult {
  std::string step;
  std::vector<std::filesystem::path> written;
  nlohmann::json summary = nlohmann::json::object();
};

class Workflow {
 public:
  explicit Workflow(WorkflowConfig config);

  StepResult synth();
  StepResult ingest();
  StepResult embed();
  StepResult train();
  StepResult evaluate();
  StepResult screen();
  StepResult revalue();
  StepResult backtest();

  const WorkflowConfig& config() const { return config_; }
  std::filesystem::path corpus_dir() const;
  std::filesystem::path cache_dir() const;
  std::filesystem::path runs_dir() const;
  std::filesystem::path models_dir() const;
  std::filesystem::path reports_dir() const;

  Corpus load_corpus() const;
  // Embeddings from the cache only; dependency error when `embed` has not run.
  EmbeddingTable load_embeddings(const Corpus& corpus) const;
  nlohmann::json load_manifest(const std::string& run) const;
  std::vector<Prediction> load_predictions(const std::string& run) const;

 private:
  std::filesystem::path write(StepResult& r, const std::filesystem::path& rel, const std::string& content) const;
  WorkflowConfig config_;
};

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& name);

}  // namespace patent
