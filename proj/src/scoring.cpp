#include "patent/scoring.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "patent/error.hpp"
#include "patent/report.hpp"
#include "patent/stats.hpp"

namespace patent {

std::string ModelBundle::file_name(PredictionTask task, Variant variant) {
  return fmt::format("{}_{}.json", to_string(task), to_string(variant));
}

std::string ModelBundle::file_name() const { return file_name(layout.task, layout.variant); }

double ModelBundle::predict(std::span<const float> embedding, const StructuralInput& structural) const {
  std::vector<double> row(layout.size());
  assemble_features(layout, embedding, structural, default_ln_cap, row);
  scaler.apply(row);
  if (layout.task == PredictionTask::acceptance) return model.predict_proba(row);
  return target_center + target_scale * model.predict_value(row);
}

double ModelBundle::percentile(double prediction) const {
  const auto& q = training_quantiles;
  if (q.size() < 2) fail(ErrorKind::not_ready, "model bundle has no training quantiles");
  if (prediction <= q.front()) return 0.0;
  if (prediction >= q.back()) return 1.0;
  auto it = std::upper_bound(q.begin(), q.end(), prediction);
  std::size_t hi = static_cast<std::size_t>(it - q.begin());
  std::size_t lo = hi - 1;
  double frac = q[hi] > q[lo] ? (prediction - q[lo]) / (q[hi] - q[lo]) : 0.0;
  return (static_cast<double>(lo) + frac) / static_cast<double>(q.size() - 1);
}

std::vector<double> percentile_grid(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<double> grid;
  for (int p = 0; p <= 100; ++p) grid.push_back(quantile_sorted(values, p / 100.0));
  return grid;
}

nlohmann::json ModelBundle::to_json() const {
  return {{"format", "patent-bundle"},
          {"version", 1},
          {"vintage", vintage},
          {"train_years", train_years},
          {"layout", layout.to_json()},
          {"text_source", to_string(text_source)},
          {"scaler", scaler.to_json()},
          {"transform", transform.to_json()},
          {"target_center", target_center},
          {"target_scale", target_scale},
          {"default_ln_cap", default_ln_cap},
          {"training_quantiles", training_quantiles},
          {"model", model.to_json()}};
}

ModelBundle ModelBundle::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "patent-bundle" || j.value("version", 0) != 1) {
    fail(ErrorKind::parse, "not a patent-bundle version 1 file");
  }
  ModelBundle b;
  b.vintage = j.at("vintage").get<int>();
  b.train_years = j.at("train_years").get<std::vector<int>>();
  b.layout = FeatureLayout::from_json(j.at("layout"));
  b.text_source = parse_text_source(j.at("text_source").get<std::string>());
  b.scaler = FeatureScaler::from_json(j.at("scaler"));
  b.transform = TargetTransform::from_json(j.at("transform"));
  b.target_center = j.at("target_center").get<double>();
  b.target_scale = j.at("target_scale").get<double>();
  b.default_ln_cap = j.at("default_ln_cap").get<double>();
  b.training_quantiles = j.at("training_quantiles").get<std::vector<double>>();
  b.model = MLPModel::from_json(j.at("model"));
  if (b.model.config().input_dim != b.layout.size() || b.scaler.mean.size() != b.layout.size()) {
    fail(ErrorKind::schema, "model bundle parts disagree on the feature count");
  }
  return b;
}

void ModelBundle::save(const std::filesystem::path& path) const { write_text_file(path, to_json().dump() + "\n"); }

ModelBundle ModelBundle::load(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::parse, fmt::format("'{}' is not valid JSON", path.string()));
  return from_json(j);
}

}  // namespace patent
