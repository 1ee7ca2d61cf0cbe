#include "patent/features.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "patent/error.hpp"

namespace patent {

std::string to_string(PredictionTask task) { return task == PredictionTask::acceptance ? "acceptance" : "value"; }

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::full: return "full";
    case Variant::no_embedding: return "no_embedding";
    case Variant::embedding_only: return "embedding_only";
  }
  return "full";
}

std::string to_string(TextSource source) { return source == TextSource::application ? "application" : "grant"; }

PredictionTask parse_prediction_task(std::string_view text) {
  if (text == "acceptance") return PredictionTask::acceptance;
  if (text == "value") return PredictionTask::value;
  fail(ErrorKind::config, fmt::format("unknown prediction task '{}'", text));
}

Variant parse_variant(std::string_view text) {
  if (text == "full") return Variant::full;
  if (text == "no_embedding") return Variant::no_embedding;
  if (text == "embedding_only") return Variant::embedding_only;
  fail(ErrorKind::config, fmt::format("unknown variant '{}'", text));
}

TextSource parse_text_source(std::string_view text) {
  if (text == "application") return TextSource::application;
  if (text == "grant") return TextSource::grant;
  fail(ErrorKind::config, fmt::format("unknown text source '{}'", text));
}

std::vector<std::string> structural_names(PredictionTask task) {
  std::vector<std::string> names;
  for (char c : kCpcSections) names.push_back(fmt::format("cpc_{}", c));
  names.insert(names.end(), {"cpc_count", "is_ict", "is_biotech", "is_hightech", "is_research_institution"});
  for (int k = 1; k <= 12; ++k) names.push_back(fmt::format("ff12_{}", k));
  if (task == PredictionTask::acceptance) {
    names.push_back("ln_market_cap");
  } else {
    names.push_back("ln1p_claims");
    names.push_back("is_ai");
  }
  return names;
}

StructuralInput StructuralInput::from_record(const ApplicationRecord& r) {
  StructuralInput s;
  s.cpc = r.cpc;
  s.is_ict = r.is_ict;
  s.is_biotech = r.is_biotech;
  s.is_hightech = r.is_hightech;
  s.is_research_institution = r.is_research_institution;
  s.is_ai = r.is_ai;
  s.ff12_industry = r.ff12_industry;
  s.num_claims = r.num_claims;
  if (r.market_cap_musd > 0) s.market_cap_musd = r.market_cap_musd;
  return s;
}

std::vector<std::string> FeatureLayout::names() const {
  std::vector<std::string> out;
  for (std::size_t d = 0; d < embedding_dim; ++d) out.push_back(fmt::format("emb_{}", d));
  out.insert(out.end(), structural.begin(), structural.end());
  return out;
}

FeatureLayout FeatureLayout::make(PredictionTask task, Variant variant) {
  FeatureLayout l;
  l.task = task;
  l.variant = variant;
  l.embedding_dim = variant == Variant::no_embedding ? 0 : kEmbeddingDim;
  if (variant != Variant::embedding_only) l.structural = structural_names(task);
  return l;
}

nlohmann::json FeatureLayout::to_json() const {
  return {{"task", to_string(task)},
          {"variant", to_string(variant)},
          {"embedding_dim", embedding_dim},
          {"structural", structural}};
}

FeatureLayout FeatureLayout::from_json(const nlohmann::json& j) {
  FeatureLayout l = make(parse_prediction_task(j.at("task").get<std::string>()),
                         parse_variant(j.at("variant").get<std::string>()));
  if (j.at("embedding_dim").get<std::size_t>() != l.embedding_dim ||
      j.at("structural").get<std::vector<std::string>>() != l.structural) {
    fail(ErrorKind::schema, "stored feature layout does not match this build's layout");
  }
  return l;
}

void assemble_features(const FeatureLayout& layout, std::span<const float> embedding,
                       const StructuralInput& s, double default_ln_cap, std::span<double> out) {
  if (out.size() != layout.size()) {
    fail(ErrorKind::shape, fmt::format("feature row has {} slots, layout needs {}", out.size(), layout.size()));
  }
  std::size_t at = 0;
  if (layout.embedding_dim > 0) {
    if (embedding.size() != layout.embedding_dim) {
      fail(ErrorKind::dimension_mismatch,
           fmt::format("embedding has {} values, layout needs {}", embedding.size(), layout.embedding_dim));
    }
    for (float v : embedding) out[at++] = v;
  }
  if (layout.structural.empty()) return;

  const CpcSet cpc = s.cpc.value_or(CpcSet{});
  for (char c : kCpcSections) out[at++] = cpc.contains(c) ? 1.0 : 0.0;
  out[at++] = cpc.count();
  out[at++] = s.is_ict.value_or(false);
  out[at++] = s.is_biotech.value_or(false);
  out[at++] = s.is_hightech.value_or(false);
  out[at++] = s.is_research_institution.value_or(false);
  for (int k = 1; k <= 12; ++k) out[at++] = s.ff12_industry == k ? 1.0 : 0.0;
  if (layout.task == PredictionTask::acceptance) {
    if (s.market_cap_musd) {
      if (!(*s.market_cap_musd > 0)) fail(ErrorKind::domain, "market cap must be positive");
      out[at++] = std::log(*s.market_cap_musd);
    } else {
      out[at++] = default_ln_cap;
    }
  } else {
    out[at++] = std::log1p(static_cast<double>(std::max(0, s.num_claims.value_or(0))));
    out[at++] = s.is_ai.value_or(false);
  }
}

FeatureScaler FeatureScaler::fit(const Matrix& X) {
  if (X.rows() == 0) fail(ErrorKind::shape, "cannot fit a scaler on zero rows");
  FeatureScaler s;
  const std::size_t n = X.rows(), k = X.cols();
  s.mean.assign(k, 0.0);
  s.scale.assign(k, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) s.mean[c] += X(r, c);
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      double d = X(r, c) - s.mean[c];
      s.scale[c] += d * d;
    }
  }
  for (double& v : s.scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 0)) v = 1.0;
  }
  return s;
}

void FeatureScaler::apply(std::span<double> row) const {
  if (row.size() != mean.size()) fail(ErrorKind::shape, "scaler width does not match feature row");
  for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean[c]) / scale[c];
}

void FeatureScaler::apply(Matrix& X) const {
  for (std::size_t r = 0; r < X.rows(); ++r) apply(X.row(r));
}

nlohmann::json FeatureScaler::to_json() const { return {{"mean", mean}, {"scale", scale}}; }

FeatureScaler FeatureScaler::from_json(const nlohmann::json& j) {
  FeatureScaler s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size()) fail(ErrorKind::parse, "scaler mean and scale differ in length");
  return s;
}

EmbeddingTable EmbeddingTable::build(std::span<const ApplicationRecord> apps, const TextEmbedder& embed,
                                     bool include_grants) {
  EmbeddingTable t;
  t.n_ = apps.size();
  t.app_.resize(apps.size() * kEmbeddingDim);
  t.has_grant_.assign(apps.size(), false);
  if (include_grants) t.grant_.assign(apps.size() * kEmbeddingDim, 0.0f);
  for (std::size_t i = 0; i < apps.size(); ++i) {
    Embedding e = embed(application_text(apps[i]));
    std::copy(e.values().begin(), e.values().end(), t.app_.begin() + static_cast<std::ptrdiff_t>(i * kEmbeddingDim));
    if (!include_grants) continue;
    if (auto g = grant_text(apps[i])) {
      Embedding ge = embed(*g);
      std::copy(ge.values().begin(), ge.values().end(),
                t.grant_.begin() + static_cast<std::ptrdiff_t>(i * kEmbeddingDim));
      t.has_grant_[i] = true;
    }
  }
  return t;
}

std::span<const float> EmbeddingTable::application(std::size_t i) const {
  return {app_.data() + i * kEmbeddingDim, kEmbeddingDim};
}

std::span<const float> EmbeddingTable::grant(std::size_t i) const {
  if (!has_grant_[i]) return {};
  return {grant_.data() + i * kEmbeddingDim, kEmbeddingDim};
}

}  // namespace patent
