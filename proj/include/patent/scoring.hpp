#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "patent/features.hpp"
#include "patent/neuralnet.hpp"
#include "patent/transforms.hpp"

namespace patent {

// Everything needed to score a record with one trained per-year model.
struct ModelBundle {
  int vintage = 0;  // the test year this model was trained for
  std::vector<int> train_years;
  FeatureLayout layout;
  TextSource text_source = TextSource::application;
  MLPModel model;
  FeatureScaler scaler;
  TargetTransform transform;  // identity for acceptance
  // Value models learn (target - center) / scale; predict() undoes it.
  double target_center = 0;
  double target_scale = 1;
  double default_ln_cap = 0;  // training median, used when market cap is unknown
  // Percentiles 0..100 of the model's predictions on its training rows.
  std::vector<double> training_quantiles;

  // e.g. "acceptance_full.json"
  std::string file_name() const;
  static std::string file_name(PredictionTask task, Variant variant);

  // Probability for acceptance models, transformed value for value models.
  double predict(std::span<const float> embedding, const StructuralInput& structural) const;
  // Position of `prediction` within the training distribution, in [0, 1].
  double percentile(double prediction) const;

  nlohmann::json to_json() const;
  static ModelBundle from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ModelBundle load(const std::filesystem::path& path);
};

std::vector<double> percentile_grid(std::vector<double> values);

}  // namespace patent
