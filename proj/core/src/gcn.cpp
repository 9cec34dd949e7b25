#include "ngcn/gcn.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "ngcn/error.hpp"

namespace ngcn {
namespace {

std::string layer_name(std::size_t k) { return "layer " + std::to_string(k + 1); }

void check_params(const GcnParams& params) {
  const auto& cfg = params.config;
  if (params.weights.size() != cfg.layer_count()) {
    throw UsageError("gcn: expected " + std::to_string(cfg.layer_count()) +
                     " weight matrices, got " + std::to_string(params.weights.size()));
  }
  const std::size_t bias = cfg.use_bias ? 1 : 0;
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    const auto& w = params.weights[k];
    if (w.rows() != cfg.layer_dims[k + 1] || w.cols() != cfg.layer_dims[k] + bias) {
      throw UsageError("gcn: " + layer_name(k) + " weights are " + shape_string(w) +
                       ", expected " + std::to_string(cfg.layer_dims[k + 1]) + "x" +
                       std::to_string(cfg.layer_dims[k] + bias));
    }
  }
}

}  // namespace

void GcnConfig::validate(std::size_t classes) const {
  if (layer_count() < 2) throw UsageError("gcn: at least two layers are required");
  if (layer_dims.back() != classes) {
    throw UsageError("gcn: output width " + std::to_string(layer_dims.back()) +
                     " differs from class count " + std::to_string(classes));
  }
  for (auto d : layer_dims) {
    if (d == 0) throw UsageError("gcn: layer widths must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw UsageError("gcn: dropout rate must lie in [0, 1)");
  }
}

GcnParams init_glorot(const GcnConfig& config, std::uint64_t seed) {
  GcnParams params{config, {}};
  Rng rng(seed);
  const std::size_t bias = config.use_bias ? 1 : 0;
  for (std::size_t k = 0; k < config.layer_count(); ++k) {
    const std::size_t fan_in = config.layer_dims[k];
    const std::size_t fan_out = config.layer_dims[k + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseMatrix w(fan_out, fan_in + bias);
    for (std::size_t r = 0; r < fan_out; ++r) {
      for (std::size_t c = 0; c < fan_in; ++c) w(r, c) = bound * (2.0 * rng.uniform() - 1.0);
    }
    params.weights.push_back(std::move(w));
  }
  return params;
}

LayerInput::LayerInput(DenseMatrix aggregated, double sparse_threshold)
    : dense_(std::move(aggregated)) {
  if (dense_.empty()) return;
  const auto nonzeros = static_cast<double>(
      (dense_.eigen().array() != 0.0).count());
  if (nonzeros / static_cast<double>(dense_.size()) < sparse_threshold) {
    sparse_ = dense_.eigen().sparseView();
    sparse_->makeCompressed();
  }
}

DenseMatrix LayerInput::project(const DenseMatrix& weights, bool bias) const {
  const auto d = static_cast<Eigen::Index>(dim());
  if (weights.cols() != dim() + (bias ? 1 : 0)) {
    throw UsageError("project: weights " + shape_string(weights) +
                     " do not match input width " + std::to_string(dim()));
  }
  DenseMatrix z(weights.rows(), node_count());
  const auto w = weights.eigen().leftCols(d);
  if (sparse_) {
    z.eigen().noalias() = w * (*sparse_);
  } else {
    z.eigen().noalias() = w * dense_.eigen();
  }
  if (bias) z.eigen().colwise() += weights.eigen().col(d);
  return z;
}

DenseMatrix LayerInput::outer(const DenseMatrix& signal, bool bias) const {
  if (signal.cols() != node_count()) {
    throw UsageError("outer: signal " + shape_string(signal) + " does not cover " +
                     std::to_string(node_count()) + " nodes");
  }
  const auto d = static_cast<Eigen::Index>(dim());
  DenseMatrix g(signal.rows(), dim() + (bias ? 1 : 0));
  auto left = g.eigen().leftCols(d);
  if (sparse_) {
    left.noalias() = signal.eigen() * sparse_->transpose();
  } else {
    left.noalias() = signal.eigen() * dense_.eigen().transpose();
  }
  if (bias) g.eigen().col(d) = signal.eigen().rowwise().sum();
  return g;
}

DenseMatrix LayerInput::weighted_gram(std::span<const double> node_weights, bool bias) const {
  if (node_weights.size() != node_count()) {
    throw UsageError("weighted_gram: expected " + std::to_string(node_count()) + " weights");
  }
  const auto d = static_cast<Eigen::Index>(dim());
  std::vector<Eigen::Index> selected;
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(node_count()));
  for (std::size_t i = 0; i < node_weights.size(); ++i) {
    if (node_weights[i] < 0.0) throw UsageError("weighted_gram: negative node weight");
    if (node_weights[i] > 0.0) {
      selected.push_back(static_cast<Eigen::Index>(i));
      weights[static_cast<Eigen::Index>(i)] = node_weights[i];
    }
  }

  const auto m = static_cast<Eigen::Index>(selected.size());
  DenseMatrix out(dim() + (bias ? 1 : 0), dim() + (bias ? 1 : 0));
  auto gram = out.eigen().topLeftCorner(d, d);
  if (sparse_) {
    Eigen::SparseMatrix<double> pick(static_cast<Eigen::Index>(node_count()), m);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(selected.size());
    for (Eigen::Index p = 0; p < m; ++p) {
      entries.emplace_back(selected[p], p, std::sqrt(weights[selected[p]]));
    }
    pick.setFromTriplets(entries.begin(), entries.end());
    const Eigen::SparseMatrix<double> scaled = (*sparse_) * pick;
    const Eigen::SparseMatrix<double> product = scaled * scaled.transpose();
    gram = product.toDense();
  } else {
    Eigen::MatrixXd scaled(d, m);
    for (Eigen::Index p = 0; p < m; ++p) {
      scaled.col(p) = dense_.eigen().col(selected[p]) * std::sqrt(weights[selected[p]]);
    }
    Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(d, d);
    lower.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
    gram = lower.selfadjointView<Eigen::Lower>();
  }
  if (bias) {
    Eigen::VectorXd weighted_sum = sparse_ ? Eigen::VectorXd((*sparse_) * weights)
                                           : Eigen::VectorXd(dense_.eigen() * weights);
    out.eigen().col(d).head(d) = weighted_sum;
    out.eigen().row(d).head(d) = weighted_sum.transpose();
    out(dim(), dim()) = weights.sum();
  }
  return out;
}

std::shared_ptr<const LayerInput> aggregate_features(const NormalizedAdjacency& norm,
                                                     const DenseMatrix& features) {
  return std::make_shared<const LayerInput>(spmm(norm, features));
}

DenseMatrix log_softmax(const DenseMatrix& logits) {
  DenseMatrix out(logits.rows(), logits.cols());
  const auto in = logits.eigen();
  auto res = out.eigen();
  for (Eigen::Index j = 0; j < in.cols(); ++j) {
    const double mx = in.col(j).maxCoeff();
    const double lse = mx + std::log((in.col(j).array() - mx).exp().sum());
    res.col(j) = in.col(j).array() - lse;
  }
  return out;
}

ForwardCache forward(const GcnParams& params, const NormalizedAdjacency& norm,
                     const DenseMatrix& features, Mode mode, Rng& rng) {
  if (features.cols() != norm.node_count()) {
    throw UsageError("forward: features have " + std::to_string(features.cols()) +
                     " columns, graph has " + std::to_string(norm.node_count()) + " nodes");
  }
  return forward(params, norm, aggregate_features(norm, features), mode, rng);
}

ForwardCache forward(const GcnParams& params, const NormalizedAdjacency& norm,
                     std::shared_ptr<const LayerInput> first_input, Mode mode, Rng& rng) {
  check_params(params);
  const auto& cfg = params.config;
  if (first_input->dim() != cfg.layer_dims.front() ||
      first_input->node_count() != norm.node_count()) {
    throw UsageError("forward: input is " + shape_string(first_input->dense()) +
                     ", expected d0=" + std::to_string(cfg.layer_dims.front()) +
                     " by n=" + std::to_string(norm.node_count()));
  }

  ForwardCache cache;
  cache.mode = mode;
  std::shared_ptr<const LayerInput> input = std::move(first_input);
  const std::size_t layers = cfg.layer_count();
  for (std::size_t k = 0; k < layers; ++k) {
    LayerCache layer;
    layer.input = input;
    layer.pre_activation = input->project(params.weights[k], cfg.use_bias);
    if (!all_finite(layer.pre_activation)) {
      throw NumericError("forward: non-finite pre-activation in " + layer_name(k));
    }

    if (cfg.activation(k) == Activation::kIdentity) {
      layer.output = layer.pre_activation;
    } else {
      layer.output = layer.pre_activation;
      layer.output.eigen() = layer.output.eigen().cwiseMax(0.0);
    }

    if (k == 0 && mode == Mode::kTrain && cfg.dropout_rate > 0.0 && layers > 1) {
      const double keep_scale = 1.0 / (1.0 - cfg.dropout_rate);
      layer.dropout_scale = DenseMatrix(layer.output.rows(), layer.output.cols());
      for (double& s : layer.dropout_scale.values()) {
        s = rng.uniform() >= cfg.dropout_rate ? keep_scale : 0.0;
      }
      layer.output.eigen().array() *= layer.dropout_scale.eigen().array();
    }

    if (k + 1 < layers) {
      input = std::make_shared<const LayerInput>(spmm(norm, layer.output), 0.0);
    } else {
      cache.log_probs = log_softmax(layer.pre_activation);
      if (!all_finite(cache.log_probs)) {
        throw NumericError("forward: non-finite log-probabilities in " + layer_name(k));
      }
    }
    cache.layers.push_back(std::move(layer));
  }
  return cache;
}

DenseMatrix probabilities(const ForwardCache& cache) {
  DenseMatrix p = cache.log_probs;
  p.eigen() = p.eigen().array().exp();
  return p;
}

std::vector<int> predict(const ForwardCache& cache) {
  const auto lp = cache.log_probs.eigen();
  std::vector<int> out(static_cast<std::size_t>(lp.cols()));
  for (Eigen::Index j = 0; j < lp.cols(); ++j) {
    Eigen::Index best = 0;
    lp.col(j).maxCoeff(&best);
    out[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return out;
}

namespace {

void check_targets(const ForwardCache& cache, std::span<const int> labels,
                   std::span<const double> weights) {
  const std::size_t n = cache.node_count();
  if (labels.size() != n || weights.size() != n) {
    throw UsageError("loss: expected " + std::to_string(n) + " labels and weights, got " +
                     std::to_string(labels.size()) + " and " + std::to_string(weights.size()));
  }
  const auto classes = static_cast<int>(cache.log_probs.rows());
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] < 0.0) throw UsageError("loss: negative weight at node " + std::to_string(i));
    if (weights[i] != 0.0 && (labels[i] < 0 || labels[i] >= classes)) {
      throw UsageError("loss: label " + std::to_string(labels[i]) + " of node " +
                       std::to_string(i) + " is outside [0, " + std::to_string(classes) + ")");
    }
  }
}

}  // namespace

double loss(const ForwardCache& cache, std::span<const int> labels,
            std::span<const double> weights) {
  check_targets(cache, labels, weights);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (weights[i] != 0.0) {
      total -= weights[i] * cache.log_probs(static_cast<std::size_t>(labels[i]), i);
    }
  }
  return total;
}

BackwardResult backward(const ForwardCache& cache, const GcnParams& params,
                        const NormalizedAdjacency& norm, std::span<const int> labels,
                        std::span<const double> weights) {
  check_params(params);
  check_targets(cache, labels, weights);
  const std::size_t layers = params.config.layer_count();
  if (cache.layers.size() != layers) {
    throw UsageError("backward: cache has " + std::to_string(cache.layers.size()) +
                     " layers, model has " + std::to_string(layers));
  }
  const bool bias = params.config.use_bias;
  const std::size_t n = cache.node_count();

  BackwardResult result;
  result.gradients.resize(layers);
  result.signals.resize(layers);
  result.inputs.resize(layers);
  result.weights.assign(weights.begin(), weights.end());
  result.bias = bias;

  // Softmax + NLL: dcost/dlogits = w_i (p_i - onehot(y_i)).
  DenseMatrix signal = probabilities(cache);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    if (w == 0.0) {
      signal.eigen().col(static_cast<Eigen::Index>(i)).setZero();
      continue;
    }
    signal.eigen().col(static_cast<Eigen::Index>(i)) *= w;
    signal(static_cast<std::size_t>(labels[i]), i) -= w;
  }

  for (std::size_t k = layers; k-- > 0;) {
    const auto& layer = cache.layers[k];
    result.inputs[k] = layer.input;
    result.gradients[k] = layer.input->outer(signal, bias);
    if (k > 0) {
      const auto d = static_cast<Eigen::Index>(layer.input->dim());
      DenseMatrix d_aggregated(layer.input->dim(), n);
      d_aggregated.eigen().noalias() =
          params.weights[k].eigen().leftCols(d).transpose() * signal.eigen();
      // Ã is symmetric, so the adjoint of X -> X Ã is the same map.
      DenseMatrix d_output = spmm(norm, d_aggregated);
      const auto& below = cache.layers[k - 1];
      if (!below.dropout_scale.empty()) {
        d_output.eigen().array() *= below.dropout_scale.eigen().array();
      }
      if (params.config.activation(k - 1) == Activation::kRelu) {
        d_output.eigen() =
            (below.pre_activation.eigen().array() > 0.0).select(d_output.eigen(), 0.0);
      }
      result.signals[k] = std::move(signal);
      signal = std::move(d_output);
    } else {
      result.signals[k] = std::move(signal);
    }
  }
  for (std::size_t k = 0; k < layers; ++k) {
    ensure_finite(result.gradients[k], "backward: " + layer_name(k) + " gradient");
  }
  return result;
}

}  // namespace ngcn
