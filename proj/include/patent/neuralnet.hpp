#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "patent/matrix.hpp"

namespace patent {

enum class Task { binary, regression };
enum class Activation { mish, swish, relu };

std::string to_string(Task task);
std::string to_string(Activation activation);
Task parse_task(std::string_view text);
Activation parse_activation(std::string_view text);

double softplus(double x);
double mish(double x);
double mish_derivative(double x);
double swish(double x);  // beta = 1
double swish_derivative(double x);
double sigmoid(double x);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct MLPConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims = {256, 64, 16};
  double dropout_rate = 0.2;
  Task task = Task::binary;
  Activation activation = Activation::mish;
  AdamConfig adam;
  std::size_t epochs = 30;
  std::size_t batch_size = 256;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const MLPConfig&) const = default;
};

void to_json(nlohmann::json& j, const MLPConfig& c);
void from_json(const nlohmann::json& j, MLPConfig& c);

struct DenseLayer {
  Matrix weights;  // fan_in x fan_out
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

enum class Mode { train, infer };

// Per-layer intermediates of one batched forward pass, kept for backprop.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;    // affine outputs
  std::vector<Matrix> post;   // activations after dropout
  std::vector<Matrix> mask;   // dropout multipliers (0 or 1/(1-rate)); empty in infer mode
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;
};

class MLPModel {
 public:
  MLPModel() = default;
  // Fan-in scaled uniform init, U(-sqrt(3/fan_in), sqrt(3/fan_in)), seeded from config.seed.
  explicit MLPModel(MLPConfig config);
  static MLPModel zeros(MLPConfig config);

  const MLPConfig& config() const { return config_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t trained_epochs() const { return trained_epochs_; }
  std::size_t parameter_count() const;

  // Raw network output (logit or value) for each row of X. `rng` is only drawn
  // from in train mode.
  std::vector<double> forward(ConstMatrixView X, Mode mode, std::mt19937_64* rng = nullptr,
                              ForwardCache* cache = nullptr) const;
  double forward(std::span<const double> features) const;

  double predict_proba(std::span<const double> features) const;
  double predict_value(std::span<const double> features) const;
  // Probabilities for a binary model, values for a regression model.
  std::vector<double> predict(ConstMatrixView X) const;

  nlohmann::json to_json() const;
  static MLPModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static MLPModel load(const std::filesystem::path& path);

  bool operator==(const MLPModel&) const = default;

 private:
  friend struct Trainer;
  MLPConfig config_;
  std::vector<DenseLayer> layers_;
  std::size_t trained_epochs_ = 0;
};

// Mean task loss over rows: sigmoid cross-entropy from the logit, or squared error.
double task_loss(Task task, std::span<const double> outputs, std::span<const double> targets);
double loss(const MLPModel& model, ConstMatrixView X, std::span<const double> y);

// Gradient of the mean loss with dropout disabled.
Gradients loss_gradient(const MLPModel& model, ConstMatrixView X, std::span<const double> y);

struct TrainResult {
  MLPModel model;
  std::vector<double> loss_trace;  // mean training loss per epoch
};

// Minibatch Adam from `model`'s current parameters.
TrainResult train(MLPModel model, ConstMatrixView X, std::span<const double> y);

// Max over parameters of |analytic - numeric| / max(|analytic| + |numeric|, floor),
// with central differences of step `h`.
double gradient_check(const MLPModel& model, std::span<const double> features, double label,
                      double h = 1e-5, double floor = 1e-4);

}  // namespace patent
