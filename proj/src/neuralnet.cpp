#include "patent/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "patent/error.hpp"
#include "patent/kernels.hpp"

namespace patent {

namespace {

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double activate(Activation a, double x) {
  switch (a) {
    case Activation::mish: return mish(x);
    case Activation::swish: return swish(x);
    case Activation::relu: return x > 0 ? x : 0.0;
  }
  return x;
}

double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::mish: return mish_derivative(x);
    case Activation::swish: return swish_derivative(x);
    case Activation::relu: return x > 0 ? 1.0 : 0.0;
  }
  return 1.0;
}

void check_targets(Task task, std::span<const double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (task == Task::binary && y[i] != 0.0 && y[i] != 1.0) {
      fail(ErrorKind::domain, fmt::format("binary label {} at row {} is not 0 or 1", y[i], i));
    }
    if (!std::isfinite(y[i])) fail(ErrorKind::domain, fmt::format("target at row {} is not finite", i));
  }
}

// d(mean loss)/d(output) per row.
std::vector<double> output_gradient(Task task, std::span<const double> out, std::span<const double> y) {
  std::vector<double> g(out.size());
  const double scale = 1.0 / static_cast<double>(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    g[i] = task == Task::binary ? (sigmoid(out[i]) - y[i]) * scale : 2.0 * (out[i] - y[i]) * scale;
  }
  return g;
}

Gradients zero_gradients(const MLPModel& model) {
  Gradients g;
  for (const auto& layer : model.layers()) {
    g.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
    g.bias.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

Gradients backward(const MLPModel& model, const ForwardCache& cache, std::span<const double> grad_out) {
  const auto& layers = model.layers();
  const Activation act = model.config().activation;
  Gradients g = zero_gradients(model);
  Matrix delta(grad_out.size(), 1);
  std::copy(grad_out.begin(), grad_out.end(), delta.storage().begin());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& in = l == 0 ? cache.input : cache.post[l - 1];
    kernels::affine_weight_grad(in, delta, g.weights[l], g.bias[l]);
    if (l == 0) break;
    Matrix upstream(delta.rows(), layers[l].weights.rows());
    kernels::affine_input_grad(delta, layers[l].weights, upstream);
    const Matrix& pre = cache.pre[l - 1];
    const bool dropped = !cache.mask.empty();
    for (std::size_t i = 0; i < upstream.storage().size(); ++i) {
      double d = upstream.storage()[i] * activate_derivative(act, pre.storage()[i]);
      if (dropped) d *= cache.mask[l - 1].storage()[i];
      upstream.storage()[i] = d;
    }
    delta = std::move(upstream);
  }
  return g;
}

}  // namespace

std::string to_string(Task task) { return task == Task::binary ? "binary" : "regression"; }

std::string to_string(Activation activation) {
  switch (activation) {
    case Activation::mish: return "mish";
    case Activation::swish: return "swish";
    case Activation::relu: return "relu";
  }
  return "mish";
}

Task parse_task(std::string_view text) {
  if (text == "binary") return Task::binary;
  if (text == "regression") return Task::regression;
  fail(ErrorKind::config, fmt::format("unknown task '{}'", text));
}

Activation parse_activation(std::string_view text) {
  if (text == "mish") return Activation::mish;
  if (text == "swish") return Activation::swish;
  if (text == "relu") return Activation::relu;
  fail(ErrorKind::config, fmt::format("unknown activation '{}'", text));
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double mish(double x) { return x * std::tanh(softplus(x)); }

double mish_derivative(double x) {
  double t = std::tanh(softplus(x));
  return t + x * (1.0 - t * t) * sigmoid(x);
}

double swish(double x) { return x * sigmoid(x); }

double swish_derivative(double x) {
  double s = sigmoid(x);
  return s + x * s * (1.0 - s);
}

void MLPConfig::validate() const {
  if (input_dim == 0) fail(ErrorKind::config, "input_dim must be positive");
  if (hidden_dims.empty()) fail(ErrorKind::config, "hidden_dims must not be empty");
  for (auto h : hidden_dims) {
    if (h == 0) fail(ErrorKind::config, "hidden layer width must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail(ErrorKind::config, "dropout_rate must be in [0,1)");
  if (epochs == 0 || batch_size == 0) fail(ErrorKind::config, "epochs and batch_size must be positive");
  if (!(adam.learning_rate > 0) || !(adam.epsilon > 0) || !(adam.beta1 >= 0 && adam.beta1 < 1) ||
      !(adam.beta2 >= 0 && adam.beta2 < 1)) {
    fail(ErrorKind::config, "invalid Adam parameters");
  }
}

void to_json(nlohmann::json& j, const MLPConfig& c) {
  j = {{"input_dim", c.input_dim},
       {"hidden_dims", c.hidden_dims},
       {"dropout_rate", c.dropout_rate},
       {"task", to_string(c.task)},
       {"activation", to_string(c.activation)},
       {"adam",
        {{"learning_rate", c.adam.learning_rate},
         {"beta1", c.adam.beta1},
         {"beta2", c.adam.beta2},
         {"epsilon", c.adam.epsilon}}},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, MLPConfig& c) {
  MLPConfig d;
  c.input_dim = j.value("input_dim", d.input_dim);
  c.hidden_dims = j.value("hidden_dims", d.hidden_dims);
  c.dropout_rate = j.value("dropout_rate", d.dropout_rate);
  c.task = parse_task(j.value("task", to_string(d.task)));
  c.activation = parse_activation(j.value("activation", to_string(d.activation)));
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    c.adam.learning_rate = a.value("learning_rate", d.adam.learning_rate);
    c.adam.beta1 = a.value("beta1", d.adam.beta1);
    c.adam.beta2 = a.value("beta2", d.adam.beta2);
    c.adam.epsilon = a.value("epsilon", d.adam.epsilon);
  }
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.seed = j.value("seed", d.seed);
}

MLPModel MLPModel::zeros(MLPConfig config) {
  config.validate();
  MLPModel m;
  m.config_ = std::move(config);
  std::size_t fan_in = m.config_.input_dim;
  auto widths = m.config_.hidden_dims;
  widths.push_back(1);
  for (auto w : widths) {
    m.layers_.push_back({Matrix(fan_in, w), std::vector<double>(w, 0.0)});
    fan_in = w;
  }
  return m;
}

MLPModel::MLPModel(MLPConfig config) : MLPModel(zeros(std::move(config))) {
  std::mt19937_64 rng(config_.seed);
  for (auto& layer : layers_) {
    const double limit = std::sqrt(3.0 / static_cast<double>(layer.weights.rows()));
    for (double& w : layer.weights.storage()) w = limit * (2.0 * unit_draw(rng) - 1.0);
  }
}

std::size_t MLPModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.storage().size() + l.bias.size();
  return n;
}

std::vector<double> MLPModel::forward(ConstMatrixView X, Mode mode, std::mt19937_64* rng,
                                      ForwardCache* cache) const {
  if (X.cols != config_.input_dim) {
    fail(ErrorKind::shape, fmt::format("model expects {} features, got {}", config_.input_dim, X.cols));
  }
  const bool dropout = mode == Mode::train && config_.dropout_rate > 0.0;
  if (dropout && rng == nullptr) fail(ErrorKind::usage, "train-mode forward needs a random stream");
  const double keep_scale = 1.0 / (1.0 - config_.dropout_rate);

  Matrix current(X.rows, X.cols);
  std::copy(X.data, X.data + X.rows * X.cols, current.storage().begin());
  if (cache) {
    cache->input = current;
    cache->pre.clear();
    cache->post.clear();
    cache->mask.clear();
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    Matrix z(X.rows, layer.weights.cols());
    kernels::affine_forward(current, layer.weights, layer.bias, z);
    if (l + 1 == layers_.size()) {
      std::vector<double> out(z.storage());
      return out;
    }
    Matrix a(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.storage().size(); ++i) a.storage()[i] = activate(config_.activation, z.storage()[i]);
    if (dropout) {
      Matrix mask(z.rows(), z.cols());
      // Drawn serially so the stream does not depend on thread count.
      for (double& m : mask.storage()) m = unit_draw(*rng) < config_.dropout_rate ? 0.0 : keep_scale;
      for (std::size_t i = 0; i < a.storage().size(); ++i) a.storage()[i] *= mask.storage()[i];
      if (cache) cache->mask.push_back(std::move(mask));
    }
    if (cache) {
      cache->pre.push_back(std::move(z));
      cache->post.push_back(a);
    }
    current = std::move(a);
  }
  return {};
}

double MLPModel::forward(std::span<const double> features) const {
  return forward(ConstMatrixView(features.data(), 1, features.size()), Mode::infer).front();
}

double MLPModel::predict_proba(std::span<const double> features) const {
  if (config_.task != Task::binary) fail(ErrorKind::usage, "predict_proba on a regression model");
  return sigmoid(forward(features));
}

double MLPModel::predict_value(std::span<const double> features) const {
  if (config_.task != Task::regression) fail(ErrorKind::usage, "predict_value on a binary model");
  return forward(features);
}

std::vector<double> MLPModel::predict(ConstMatrixView X) const {
  auto out = forward(X, Mode::infer);
  if (config_.task == Task::binary) {
    for (double& v : out) v = sigmoid(v);
  }
  return out;
}

nlohmann::json MLPModel::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : layers_) {
    layers.push_back({{"rows", l.weights.rows()},
                      {"cols", l.weights.cols()},
                      {"weights", l.weights.storage()},
                      {"bias", l.bias}});
  }
  return {{"format", "patent-mlp"},
          {"version", 1},
          {"config", config_},
          {"trained_epochs", trained_epochs_},
          {"layers", layers}};
}

MLPModel MLPModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "patent-mlp" || j.value("version", 0) != 1) {
    fail(ErrorKind::parse, "not a patent-mlp version 1 model");
  }
  MLPModel m = zeros(j.at("config").get<MLPConfig>());
  m.trained_epochs_ = j.value("trained_epochs", std::size_t{0});
  const auto& layers = j.at("layers");
  if (layers.size() != m.layers_.size()) fail(ErrorKind::parse, "model layer count does not match its config");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& dst = m.layers_[l];
    auto weights = layers[l].at("weights").get<std::vector<double>>();
    auto bias = layers[l].at("bias").get<std::vector<double>>();
    if (weights.size() != dst.weights.storage().size() || bias.size() != dst.bias.size()) {
      fail(ErrorKind::parse, fmt::format("layer {} has the wrong shape", l));
    }
    dst.weights.storage() = std::move(weights);
    dst.bias = std::move(bias);
  }
  return m;
}

void MLPModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
  out << to_json().dump() << '\n';
}

MLPModel MLPModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::not_found, fmt::format("model file '{}' not found", path.string()));
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::parse, fmt::format("model file '{}' is not valid JSON", path.string()));
  return from_json(j);
}

double task_loss(Task task, std::span<const double> outputs, std::span<const double> targets) {
  double sum = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    double z = outputs[i], y = targets[i];
    if (task == Task::binary) {
      sum += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    } else {
      sum += (z - y) * (z - y);
    }
  }
  return sum / static_cast<double>(outputs.size());
}

double loss(const MLPModel& model, ConstMatrixView X, std::span<const double> y) {
  return task_loss(model.config().task, model.forward(X, Mode::infer), y);
}

Gradients loss_gradient(const MLPModel& model, ConstMatrixView X, std::span<const double> y) {
  if (X.rows != y.size()) fail(ErrorKind::shape, "feature rows and targets differ in length");
  ForwardCache cache;
  auto out = model.forward(X, Mode::infer, nullptr, &cache);
  return backward(model, cache, output_gradient(model.config().task, out, y));
}

struct Trainer {
  static TrainResult run(MLPModel model, ConstMatrixView X, std::span<const double> y) {
    const MLPConfig& cfg = model.config_;
    if (X.rows != y.size()) fail(ErrorKind::shape, fmt::format("{} feature rows but {} targets", X.rows, y.size()));
    if (X.rows == 0) fail(ErrorKind::shape, "cannot train on an empty sample");
    if (X.cols != cfg.input_dim) {
      fail(ErrorKind::shape, fmt::format("model expects {} features, got {}", cfg.input_dim, X.cols));
    }
    check_targets(cfg.task, y);

    // Separate streams so the shuffle order does not depend on the dropout draws.
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x53485546464C45ull);
    std::mt19937_64 dropout_rng(cfg.seed ^ 0x44524F504F5554ull);
    Gradients m1 = zero_gradients(model), m2 = zero_gradients(model);
    std::vector<std::size_t> order(X.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> trace;
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng() % i)]);
      }
      double epoch_loss = 0.0;
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t b = std::min(cfg.batch_size, order.size() - start);
        Matrix batch(b, X.cols);
        std::vector<double> target(b);
        for (std::size_t r = 0; r < b; ++r) {
          const double* src = X.row(order[start + r]);
          std::copy(src, src + X.cols, batch.row(r).begin());
          target[r] = y[order[start + r]];
        }
        ForwardCache cache;
        auto out = model.forward(batch, Mode::train, &dropout_rng, &cache);
        double batch_loss = task_loss(cfg.task, out, target);
        if (!std::isfinite(batch_loss)) {
          fail(ErrorKind::diverged, fmt::format("training diverged in epoch {}", epoch + 1));
        }
        epoch_loss += batch_loss * static_cast<double>(b);
        Gradients g = backward(model, cache, output_gradient(cfg.task, out, target));

        ++step;
        const auto& a = cfg.adam;
        const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(step));
        auto update = [&](std::vector<double>& param, std::vector<double>& grad, std::vector<double>& mom,
                          std::vector<double>& var) {
          for (std::size_t i = 0; i < param.size(); ++i) {
            mom[i] = a.beta1 * mom[i] + (1.0 - a.beta1) * grad[i];
            var[i] = a.beta2 * var[i] + (1.0 - a.beta2) * grad[i] * grad[i];
            param[i] -= a.learning_rate * (mom[i] / c1) / (std::sqrt(var[i] / c2) + a.epsilon);
          }
        };
        for (std::size_t l = 0; l < model.layers_.size(); ++l) {
          update(model.layers_[l].weights.storage(), g.weights[l].storage(), m1.weights[l].storage(),
                 m2.weights[l].storage());
          update(model.layers_[l].bias, g.bias[l], m1.bias[l], m2.bias[l]);
        }
      }
      epoch_loss /= static_cast<double>(order.size());
      if (!std::isfinite(epoch_loss)) fail(ErrorKind::diverged, fmt::format("training diverged in epoch {}", epoch + 1));
      trace.push_back(epoch_loss);
      ++model.trained_epochs_;
    }
    return {std::move(model), std::move(trace)};
  }
};

TrainResult train(MLPModel model, ConstMatrixView X, std::span<const double> y) {
  return Trainer::run(std::move(model), X, y);
}

double gradient_check(const MLPModel& model, std::span<const double> features, double label, double h,
                      double floor) {
  ConstMatrixView X(features.data(), 1, features.size());
  const double y[] = {label};
  Gradients analytic = loss_gradient(model, X, y);
  MLPModel probe = model;
  double worst = 0.0;
  auto check = [&](double& param, double grad) {
    const double saved = param;
    param = saved + h;
    double up = loss(probe, X, y);
    param = saved - h;
    double down = loss(probe, X, y);
    param = saved;
    double numeric = (up - down) / (2.0 * h);
    double err = std::abs(grad - numeric) / std::max(std::abs(grad) + std::abs(numeric), floor);
    worst = std::max(worst, err);
  };
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    auto& layer = probe.layers()[l];
    for (std::size_t i = 0; i < layer.weights.storage().size(); ++i) {
      check(layer.weights.storage()[i], analytic.weights[l].storage()[i]);
    }
    for (std::size_t i = 0; i < layer.bias.size(); ++i) check(layer.bias[i], analytic.bias[l][i]);
  }
  return worst;
}

}  // namespace patent
