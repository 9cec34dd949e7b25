#include "ngcn/optim.hpp"

#include <cmath>
#include <string>

#include "ngcn/error.hpp"

namespace ngcn {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("optimizer: learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw UsageError("optimizer: momentum must lie in [0, 1)");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw UsageError("optimizer: Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw UsageError("optimizer: Adam epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw UsageError("optimizer: weight decay must be non-negative");
}

OptimizerConfig OptimizerConfig::sgd(double learning_rate, double momentum) {
  OptimizerConfig c;
  c.kind = OptimizerKind::kSgd;
  c.learning_rate = learning_rate;
  c.momentum = momentum;
  c.weight_decay = 0.0;
  return c;
}

OptimizerConfig OptimizerConfig::adam(double learning_rate, double weight_decay) {
  OptimizerConfig c;
  c.kind = OptimizerKind::kAdam;
  c.learning_rate = learning_rate;
  c.weight_decay = weight_decay;
  return c;
}

void step(GcnParams& params, std::span<const DenseMatrix> gradients, OptimizerState& state,
          const OptimizerConfig& config) {
  config.validate();
  const std::size_t layers = params.weights.size();
  if (gradients.size() != layers) {
    throw UsageError("step: " + std::to_string(gradients.size()) + " gradient blocks for " +
                     std::to_string(layers) + " layers");
  }
  for (std::size_t k = 0; k < layers; ++k) {
    if (!gradients[k].same_shape(params.weights[k])) {
      throw UsageError("step: layer " + std::to_string(k + 1) + " gradient is " +
                       shape_string(gradients[k]) + ", weights are " +
                       shape_string(params.weights[k]));
    }
  }
  const bool adam = config.kind == OptimizerKind::kAdam;
  if (state.first.empty()) {
    for (const auto& w : params.weights) {
      state.first.emplace_back(w.rows(), w.cols());
      if (adam) state.second.emplace_back(w.rows(), w.cols());
    }
  }
  if (state.first.size() != layers || (adam && state.second.size() != layers)) {
    throw UsageError("step: optimizer state does not match the parameter blocks");
  }
  for (std::size_t k = 0; k < layers; ++k) {
    if (!state.first[k].same_shape(params.weights[k]) ||
        (adam && !state.second[k].same_shape(params.weights[k]))) {
      throw UsageError("step: optimizer buffer shape differs for layer " + std::to_string(k + 1));
    }
  }

  ++state.step_count;
  const double lr = config.learning_rate;
  const double c1 = adam ? 1.0 - std::pow(config.beta1, static_cast<double>(state.step_count)) : 1.0;
  const double c2 = adam ? 1.0 - std::pow(config.beta2, static_cast<double>(state.step_count)) : 1.0;

  for (std::size_t k = 0; k < layers; ++k) {
    const double wd = (config.decay_all_layers || k == 0) ? config.weight_decay : 0.0;
    auto w = params.weights[k].values();
    const auto g = gradients[k].values();
    auto m = state.first[k].values();
    if (!adam) {
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = config.momentum * m[j] + (g[j] + wd * w[j]);
        w[j] -= lr * m[j];
      }
      continue;
    }
    auto v = state.second[k].values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j] + wd * w[j];
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config.adam_epsilon);
    }
  }
}

}  // namespace ngcn
