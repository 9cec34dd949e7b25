#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "ngcn/graph.hpp"
#include "ngcn/linalg.hpp"
#include "ngcn/rng.hpp"

namespace ngcn {

enum class Activation { kRelu, kIdentity };
enum class Mode { kTrain, kEval };

struct GcnConfig {
  // d0, d1, ..., dm with dm the class count.
  std::vector<std::size_t> layer_dims;
  double dropout_rate = 0.5;
  // Bias is stored as the last column of each W_k.
  bool use_bias = true;

  std::size_t layer_count() const noexcept {
    return layer_dims.empty() ? 0 : layer_dims.size() - 1;
  }
  // ReLU on hidden layers, identity on the output layer (softmax follows).
  Activation activation(std::size_t layer) const noexcept {
    return layer + 1 == layer_count() ? Activation::kIdentity : Activation::kRelu;
  }
  // Throws UsageError unless there are >= 2 layers and dm == classes.
  void validate(std::size_t classes) const;
};

struct GcnParams {
  GcnConfig config;
  // W_k is d_k x (d_{k-1} + use_bias).
  std::vector<DenseMatrix> weights;
};

// Glorot-uniform weights in [-s, s], s = sqrt(6 / (d_k + d_{k-1})); zero bias.
GcnParams init_glorot(const GcnConfig& config, std::uint64_t seed);

/// Aggregated input X̃_{k-1} = X_{k-1} Ã of one layer (d x n).
///
/// Sparse inputs (bag-of-words features) keep a CSR copy so the products
/// with W_k and with the backprop signal skip the zeros.
class LayerInput {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  // CSR pays off only for very sparse inputs: at 2-5% density (Cora,
  // CiteSeer) it halves the product time, at 27% (PubMed) it triples it.
  explicit LayerInput(DenseMatrix aggregated, double sparse_threshold = 0.1);

  const DenseMatrix& dense() const noexcept { return dense_; }
  bool is_sparse() const noexcept { return sparse_.has_value(); }
  std::size_t dim() const noexcept { return dense_.rows(); }
  std::size_t node_count() const noexcept { return dense_.cols(); }

  // W [X̃; 1] (bias) or W X̃.
  DenseMatrix project(const DenseMatrix& weights, bool bias) const;
  // S [X̃; 1]^T (bias) or S X̃^T.
  DenseMatrix outer(const DenseMatrix& signal, bool bias) const;
  // sum_i c_i v_i v_i^T with v_i = [x̃_i; 1] (bias) or x̃_i. c_i >= 0.
  DenseMatrix weighted_gram(std::span<const double> node_weights, bool bias) const;

 private:
  DenseMatrix dense_;
  std::optional<Sparse> sparse_;
};

std::shared_ptr<const LayerInput> aggregate_features(const NormalizedAdjacency& norm,
                                                     const DenseMatrix& features);

struct LayerCache {
  std::shared_ptr<const LayerInput> input;  // X̃_{k-1}
  DenseMatrix pre_activation;               // Z_k = W_k [X̃_{k-1}; 1]
  DenseMatrix output;                       // X_k after activation and dropout
  DenseMatrix dropout_scale;                // 0 or 1/(1-rate); empty if unused
};

struct ForwardCache {
  Mode mode = Mode::kEval;
  std::vector<LayerCache> layers;
  DenseMatrix log_probs;  // c x n log-softmax of the last pre-activation

  std::size_t node_count() const noexcept { return log_probs.cols(); }
};

/// Full-graph forward pass. Dropout (inverted scaling) follows the ReLU of
/// layer 1 in train mode only. Throws NumericError naming the layer if an
/// activation becomes non-finite.
ForwardCache forward(const GcnParams& params, const NormalizedAdjacency& norm,
                     const DenseMatrix& features, Mode mode, Rng& rng);
// Same, with layer 1's aggregated input computed once by the caller.
ForwardCache forward(const GcnParams& params, const NormalizedAdjacency& norm,
                     std::shared_ptr<const LayerInput> first_input, Mode mode, Rng& rng);

// Column-wise log-softmax with max subtraction.
DenseMatrix log_softmax(const DenseMatrix& logits);
DenseMatrix probabilities(const ForwardCache& cache);
std::vector<int> predict(const ForwardCache& cache);

/// sum_i weights_i * (-log p(labels_i | node i)).
///
/// Normalization is the caller's: pass weights z_i / n̄ for the mean
/// over labeled nodes. Nodes with zero weight may carry label -1.
double loss(const ForwardCache& cache, std::span<const int> labels,
            std::span<const double> weights);

struct BackwardResult {
  // dcost/dW_k, same shape as W_k.
  std::vector<DenseMatrix> gradients;
  // dcost/dZ_k (d_k x n); column i is the per-node signal u_{k,i}.
  std::vector<DenseMatrix> signals;
  // X̃_{k-1}; column i (plus a trailing 1 with bias) is v_{k,i}.
  std::vector<std::shared_ptr<const LayerInput>> inputs;
  std::vector<double> weights;
  bool bias = true;
};

/// Gradients of loss(cache, labels, weights) with respect to every W_k.
///
/// G_k = sum_i u_{k,i} v_{k,i}^T, where the per-node weights are already
/// folded into the signals.
BackwardResult backward(const ForwardCache& cache, const GcnParams& params,
                        const NormalizedAdjacency& norm, std::span<const int> labels,
                        std::span<const double> weights);

}  // namespace ngcn
