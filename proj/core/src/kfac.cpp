#include "ngcn/kfac.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "ngcn/error.hpp"

namespace ngcn {
namespace {

void symmetrize(DenseMatrix& m) {
  auto e = m.eigen();
  const RowMajorMatrix sym = 0.5 * (e + e.transpose());
  e = sym;
}

DenseMatrix signal_gram(const DenseMatrix& signal, const Eigen::VectorXd& weights) {
  const Eigen::MatrixXd scaled = signal.eigen() * weights.cwiseSqrt().asDiagonal();
  DenseMatrix out(signal.rows(), signal.rows());
  out.eigen().noalias() = scaled * scaled.transpose();
  symmetrize(out);
  return out;
}

}  // namespace

void KfacConfig::validate() const {
  if (!(epsilon > 0.0)) throw UsageError("kfac: epsilon must be positive");
  if (!(gamma >= 0.0)) throw UsageError("kfac: gamma must be non-negative");
  if (update_every < 1) throw UsageError("kfac: update_every must be at least 1");
  if (!std::isfinite(damping_exponent)) throw UsageError("kfac: damping exponent must be finite");
}

double lambda_schedule(double t, double t_max, double gamma) {
  if (!(t_max > 0.0) || t < 0.0 || t > t_max) {
    throw UsageError("lambda_schedule: need 0 <= t <= t_max and t_max > 0");
  }
  return std::pow(t / t_max, gamma);
}

std::vector<int> pseudo_labels(const ForwardCache& cache, const SplitMask& mask, Rng& rng) {
  const std::size_t n = cache.node_count();
  if (mask.node_count() != n) throw UsageError("pseudo_labels: mask size differs from cache");
  const auto lp = cache.log_probs.eigen();
  const auto classes = lp.rows();
  std::vector<int> out(n, kNoLabel);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.train[i]) continue;
    const double u = rng.uniform();
    double cumulative = 0.0;
    int chosen = static_cast<int>(classes) - 1;
    for (Eigen::Index c = 0; c < classes; ++c) {
      cumulative += std::exp(lp(c, static_cast<Eigen::Index>(i)));
      if (u < cumulative) {
        chosen = static_cast<int>(c);
        break;
      }
    }
    out[i] = chosen;
  }
  return out;
}

StatisticsTargets statistics_targets(const SplitMask& mask, std::span<const int> labels,
                                     std::span<const int> pseudo) {
  const std::size_t n = mask.node_count();
  if (labels.size() != n || (!pseudo.empty() && pseudo.size() != n)) {
    throw UsageError("statistics_targets: label vectors must cover every node");
  }
  StatisticsTargets t{std::vector<int>(n, kNoLabel), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.train[i]) {
      t.labels[i] = labels[i];
      t.weights[i] = 1.0;
    } else if (!pseudo.empty() && pseudo[i] != kNoLabel) {
      t.labels[i] = pseudo[i];
      t.weights[i] = 1.0;
    }
  }
  return t;
}

std::vector<double> factor_weights(const SplitMask& mask, double lambda,
                                   FactorWeighting weighting) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw UsageError("factor_weights: lambda must lie in [0, 1]");
  }
  const std::size_t n = mask.node_count();
  const auto n_bar = static_cast<double>(mask.n_bar);
  const auto unlabeled = static_cast<double>(n) - n_bar;
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool labeled = mask.train[i] != 0;
    switch (weighting) {
      case FactorWeighting::kAlgorithm1Literal:
        c[i] = (labeled ? 1.0 : lambda) / (static_cast<double>(n) + lambda * n_bar);
        break;
      case FactorWeighting::kCostConsistent:
        if (labeled) {
          c[i] = 1.0 / n_bar;
        } else {
          c[i] = unlabeled > 0.0 ? lambda / unlabeled : 0.0;
        }
        break;
    }
  }
  return c;
}

KfacState update_factors(const KfacState& state, const BackwardResult& statistics,
                         const SplitMask& mask, double lambda, const KfacConfig& config,
                         int epoch) {
  config.validate();
  const double effective_lambda = config.mode == KfacMode::kLabeledOnly ? 0.0 : lambda;
  const auto weights = factor_weights(mask, effective_lambda, config.weighting);
  const std::size_t layers = statistics.signals.size();
  if (statistics.inputs.size() != layers) {
    throw UsageError("update_factors: signals and inputs disagree on layer count");
  }
  Eigen::VectorXd c(static_cast<Eigen::Index>(weights.size()));
  for (std::size_t i = 0; i < weights.size(); ++i) c[static_cast<Eigen::Index>(i)] = weights[i];

  KfacState next;
  next.epoch_of_last_update = epoch;
  next.lambda = effective_lambda;
  next.update_count = state.update_count + 1;
  next.layers.resize(layers);
  for (std::size_t k = 0; k < layers; ++k) {
    const auto& signal = statistics.signals[k];
    if (signal.cols() != mask.node_count()) {
      throw UsageError("update_factors: layer signal does not cover every node");
    }
    auto& f = next.layers[k];
    f.u = signal_gram(signal, c);
    f.v = statistics.inputs[k]->weighted_gram(weights, statistics.bias);
    symmetrize(f.v);
    f.u_inverse = damped_spd_inverse(f.u, config.epsilon, config.damping_exponent);
    f.v_inverse = damped_spd_inverse(f.v, config.epsilon, config.damping_exponent);
  }
  return next;
}

std::vector<DenseMatrix> precondition(const KfacState& state,
                                      std::span<const DenseMatrix> gradients) {
  if (!state.ready()) throw StateError("precondition: factors have not been computed yet");
  if (gradients.size() != state.layers.size()) {
    throw StateError("precondition: state holds " + std::to_string(state.layers.size()) +
                     " layers but " + std::to_string(gradients.size()) + " gradients were given");
  }
  std::vector<DenseMatrix> out;
  out.reserve(gradients.size());
  for (std::size_t k = 0; k < gradients.size(); ++k) {
    const auto& f = state.layers[k];
    const auto& g = gradients[k];
    if (f.u_inverse.rows() != g.rows() || f.v_inverse.rows() != g.cols()) {
      throw StateError("precondition: layer " + std::to_string(k + 1) + " inverses are " +
                       shape_string(f.u_inverse) + " and " + shape_string(f.v_inverse) +
                       " but the gradient is " + shape_string(g));
    }
    out.push_back(matmul(matmul(f.u_inverse, g), f.v_inverse));
  }
  return out;
}

}  // namespace ngcn
