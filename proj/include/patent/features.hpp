#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "patent/corpus.hpp"
#include "patent/embedding.hpp"
#include "patent/matrix.hpp"

namespace patent {

enum class PredictionTask { acceptance, value };
enum class Variant { full, no_embedding, embedding_only };
enum class TextSource { application, grant };

std::string to_string(PredictionTask task);
std::string to_string(Variant variant);
std::string to_string(TextSource source);
PredictionTask parse_prediction_task(std::string_view text);
Variant parse_variant(std::string_view text);
TextSource parse_text_source(std::string_view text);

// Structural columns. Acceptance: 9 CPC indicators, CPC count, ICT, biotech,
// high-tech, research institution, 12 FF12 indicators, ln(market cap).
// Value: the same without ln(market cap), plus ln(1 + claims) and the AI flag.
std::vector<std::string> structural_names(PredictionTask task);

// Structural inputs a caller may leave unknown; unset values fall back to the
// documented defaults (indicators 0, ln market cap = training median).
struct StructuralInput {
  std::optional<CpcSet> cpc;
  std::optional<bool> is_ict, is_biotech, is_hightech, is_research_institution, is_ai;
  std::optional<int> ff12_industry;
  std::optional<int> num_claims;
  std::optional<double> market_cap_musd;

  static StructuralInput from_record(const ApplicationRecord& r);
};

struct FeatureLayout {
  PredictionTask task = PredictionTask::acceptance;
  Variant variant = Variant::full;
  std::size_t embedding_dim = 0;  // leading columns
  std::vector<std::string> structural;

  std::size_t size() const { return embedding_dim + structural.size(); }
  std::vector<std::string> names() const;

  static FeatureLayout make(PredictionTask task, Variant variant);
  nlohmann::json to_json() const;
  static FeatureLayout from_json(const nlohmann::json& j);
};

// Writes one feature row. `embedding` may be null only for no_embedding.
// Missing claims count as 0 claims and a missing AI flag as 0; a missing
// market cap uses `default_ln_cap`.
void assemble_features(const FeatureLayout& layout, std::span<const float> embedding,
                       const StructuralInput& structural, double default_ln_cap, std::span<double> out);

// Per-column z-score fitted on training rows; zero-variance columns pass through centred.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureScaler fit(const Matrix& X);
  void apply(Matrix& X) const;
  void apply(std::span<double> row) const;

  nlohmann::json to_json() const;
  static FeatureScaler from_json(const nlohmann::json& j);
};

using TextEmbedder = std::function<Embedding(const std::string&)>;

// Embeddings for every application text and every available grant text of a
// corpus, stored as float rows aligned with corpus.applications.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  static EmbeddingTable build(std::span<const ApplicationRecord> apps, const TextEmbedder& embed,
                              bool include_grants);

  std::size_t size() const { return n_; }
  std::span<const float> application(std::size_t i) const;
  // Empty span when the record has no grant text.
  std::span<const float> grant(std::size_t i) const;
  bool has_grant(std::size_t i) const { return has_grant_[i]; }

 private:
  std::size_t n_ = 0;
  std::vector<float> app_;
  std::vector<float> grant_;
  std::vector<bool> has_grant_;
};

}  // namespace patent
