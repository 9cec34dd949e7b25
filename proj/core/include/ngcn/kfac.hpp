#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ngcn/data.hpp"
#include "ngcn/gcn.hpp"
#include "ngcn/linalg.hpp"
#include "ngcn/rng.hpp"

namespace ngcn {

enum class KfacMode {
  kLabeledOnly,  // factors from labeled nodes only (lambda fixed at 0)
  kPseudoLabel,  // unlabeled nodes join with sampled labels, weighted by lambda(t)
};

enum class FactorWeighting {
  // (z_i + (1 - z_i) lambda) / (n + lambda n̄)
  kAlgorithm1Literal,
  // z_i / n̄ + (1 - z_i) lambda / (n - n̄), the weighting of the semi-supervised cost
  kCostConsistent,
};

struct KfacConfig {
  // Damping is epsilon^damping_exponent, so larger values damp less.
  double epsilon = 1e4;
  double gamma = 1.0;
  KfacMode mode = KfacMode::kLabeledOnly;
  int update_every = 50;
  FactorWeighting weighting = FactorWeighting::kAlgorithm1Literal;
  // Damping added to each factor is epsilon^damping_exponent.
  double damping_exponent = -0.5;

  void validate() const;
};

struct LayerFactors {
  DenseMatrix u;  // d_k x d_k
  DenseMatrix v;  // (d_{k-1} + bias) square
  DenseMatrix u_inverse;
  DenseMatrix v_inverse;
};

struct KfacState {
  std::vector<LayerFactors> layers;
  int epoch_of_last_update = -1;
  double lambda = 0.0;
  std::size_t update_count = 0;

  bool ready() const noexcept { return !layers.empty(); }
};

inline constexpr int kNoLabel = -1;

// (t / t_max)^gamma. Requires 0 <= t <= t_max and t_max > 0.
double lambda_schedule(double t, double t_max, double gamma);

/// Draws a class for every node outside the training mask from that node's
/// predicted distribution. Training nodes get kNoLabel.
std::vector<int> pseudo_labels(const ForwardCache& cache, const SplitMask& mask, Rng& rng);

// Labels and unit weights for the statistics backward pass: every labeled
// node, plus every node that carries a pseudo-label.
struct StatisticsTargets {
  std::vector<int> labels;
  std::vector<double> weights;
};
StatisticsTargets statistics_targets(const SplitMask& mask, std::span<const int> labels,
                                     std::span<const int> pseudo);

// Per-node weights c_i multiplying u u^T and v v^T in the factor sums.
std::vector<double> factor_weights(const SplitMask& mask, double lambda,
                                   FactorWeighting weighting);

/// Rebuilds U_k and V_k from the per-node signals and inputs of a
/// statistics backward pass and refreshes their damped inverses.
/// In labeled-only mode lambda is treated as 0.
KfacState update_factors(const KfacState& state, const BackwardResult& statistics,
                         const SplitMask& mask, double lambda, const KfacConfig& config,
                         int epoch = -1);

// U_k^{-1} G_k V_k^{-1} per layer. Throws StateError if the inverses are
// missing or do not match the gradient shapes.
std::vector<DenseMatrix> precondition(const KfacState& state,
                                      std::span<const DenseMatrix> gradients);

}  // namespace ngcn
