#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ngcn/gcn.hpp"
#include "ngcn/linalg.hpp"

namespace ngcn {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 0.01;
  double momentum = 0.9;  // SGD only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Added to the gradient as weight_decay * param before the update.
  double weight_decay = 5e-4;
  // false restricts weight decay to the first layer.
  bool decay_all_layers = true;

  void validate() const;

  static OptimizerConfig sgd(double learning_rate = 0.01, double momentum = 0.9);
  static OptimizerConfig adam(double learning_rate = 0.01, double weight_decay = 5e-4);
};

struct OptimizerState {
  // SGD momentum buffers, or Adam first moments.
  std::vector<DenseMatrix> first;
  // Adam second moments; empty for SGD.
  std::vector<DenseMatrix> second;
  std::uint64_t step_count = 0;
};

/// One update of every W_k from the matching gradient block (raw or
/// preconditioned). Buffers are created on the first call.
///
///   SGD:  b <- momentum b + g;  W <- W - lr b
///   Adam: bias-corrected moments of g, W <- W - lr m̂ / (sqrt(v̂) + eps)
///
/// with g = grad + weight_decay * W. Throws UsageError on shape mismatch.
void step(GcnParams& params, std::span<const DenseMatrix> gradients, OptimizerState& state,
          const OptimizerConfig& config);

}  // namespace ngcn
