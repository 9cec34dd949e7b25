#include "ngcn/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "ngcn/error.hpp"
#include "ngcn/rng.hpp"

namespace ngcn {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

// Stream tags for the per-run random streams.
constexpr std::uint64_t kDropoutStream = 1;
constexpr std::uint64_t kPseudoLabelStream = 2;

std::string number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

std::vector<double> mask_weights(const std::vector<char>& mask) {
  const auto count = static_cast<double>(std::count(mask.begin(), mask.end(), 1));
  std::vector<double> w(mask.size(), 0.0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) w[i] = 1.0 / count;
  }
  return w;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels,
                const std::vector<char>& mask) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ++total;
    hits += predicted[i] == labels[i] ? 1 : 0;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::ofstream open_output(const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw LoadError(file.string() + ": cannot open for writing");
  return out;
}

void finish_output(std::ofstream& out, const fs::path& file) {
  out.flush();
  if (!out) throw LoadError(file.string() + ": write failed");
}

const char* kfac_mode_name(KfacMode m) {
  return m == KfacMode::kLabeledOnly ? "labeled_only" : "pseudo_label";
}

json summary_json(const Summary& s) {
  json j;
  j["mean"] = s.mean;
  j["half_width"] = s.half_width ? json(*s.half_width) : json(nullptr);
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (epochs < 1) throw UsageError("experiment: epochs must be at least 1");
  if (seeds.empty()) throw UsageError("experiment: at least one seed is required");
  if (hidden_dim < 1) throw UsageError("experiment: hidden dimension must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("experiment: dropout must lie in [0, 1)");
  if (split_id < 1 || split_id > 3) throw UsageError("experiment: split must be 1, 2 or 3");
  optimizer.validate();
  if (kfac) kfac->validate();
}

std::string ExperimentConfig::method_name() const {
  std::string name = optimizer.kind == OptimizerKind::kSgd ? "sgd" : "adam";
  if (kfac) name += kfac->mode == KfacMode::kLabeledOnly ? "-kfac_eps" : "-kfac_gamma";
  return name;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw UsageError("summarize: no values");
  const auto runs = static_cast<double>(values.size());
  Summary s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / runs;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / (runs - 1.0));
    s.half_width = 1.96 * sd / std::sqrt(runs);
  }
  return s;
}

AggregateReport aggregate(std::string method, std::vector<RunMetrics> runs) {
  if (runs.empty()) throw UsageError("aggregate: no runs");
  std::vector<double> acc, best, last, ms;
  for (const auto& r : runs) {
    acc.push_back(r.test_accuracy);
    best.push_back(r.best_val_cost);
    last.push_back(r.epochs.back().val_cost);
    ms.push_back(r.total_ms);
  }
  AggregateReport report;
  report.method = std::move(method);
  report.runs = std::move(runs);
  report.test_accuracy = summarize(acc);
  report.best_val_cost = summarize(best);
  report.final_val_cost = summarize(last);
  report.total_ms = summarize(ms);
  return report;
}

std::shared_ptr<const PreparedDataset> prepare_dataset(GraphBundle bundle, int split_id,
                                                       const SplitOptions& options) {
  validate_bundle(bundle);
  auto data = std::make_shared<PreparedDataset>();
  data->mask = make_split(bundle, split_id, options);
  data->split_id = split_id;
  data->norm = normalize(bundle.edges);
  data->first_input = aggregate_features(data->norm, bundle.features);
  data->bundle = std::move(bundle);
  return data;
}

std::shared_ptr<const PreparedDataset> prepare_dataset(const fs::path& dir, int split_id,
                                                       const SplitOptions& options) {
  return prepare_dataset(load_bundle(dir), split_id, options);
}

RunMetrics train_one(const PreparedDataset& data, const ExperimentConfig& config,
                     std::uint64_t seed) {
  config.validate();
  const auto& bundle = data.bundle;
  const auto& mask = data.mask;
  const auto& labels = bundle.labels;

  GcnConfig model;
  model.layer_dims = {bundle.d0, config.hidden_dim, bundle.classes};
  model.dropout_rate = config.dropout;
  model.validate(bundle.classes);
  GcnParams params = init_glorot(model, seed);

  Rng dropout_rng = Rng::derive(seed, kDropoutStream);
  Rng pseudo_rng = Rng::derive(seed, kPseudoLabelStream);
  const auto train_w = mask_weights(mask.train);
  const auto val_w = mask_weights(mask.val);

  OptimizerState opt_state;
  KfacState kfac_state;
  RunMetrics metrics;
  metrics.seed = seed;
  metrics.epochs.reserve(static_cast<std::size_t>(config.epochs));
  metrics.best_val_cost = std::numeric_limits<double>::infinity();

  const auto start = Clock::now();
  for (int t = 1; t <= config.epochs; ++t) {
    try {
      const auto cache = forward(params, data.norm, data.first_input, Mode::kTrain, dropout_rng);
      const auto grad = backward(cache, params, data.norm, labels, train_w);

      std::vector<DenseMatrix> update;
      if (config.kfac) {
        const auto& kc = *config.kfac;
        if ((t - 1) % kc.update_every == 0) {
          double lambda = 0.0;
          std::vector<int> pseudo;
          if (kc.mode == KfacMode::kPseudoLabel) {
            lambda = lambda_schedule(t, config.epochs, kc.gamma);
            // With lambda = 0 pseudo-labeled nodes carry zero factor weight
            // but would still reach labeled nodes' hidden signals through
            // the graph, so they are left out entirely.
            if (lambda > 0.0) pseudo = pseudo_labels(cache, mask, pseudo_rng);
          }
          const auto targets = statistics_targets(mask, labels, pseudo);
          const auto stats = backward(cache, params, data.norm, targets.labels, targets.weights);
          kfac_state = update_factors(kfac_state, stats, mask, lambda, kc, t);
        }
        update = precondition(kfac_state, grad.gradients);
      }
      step(params, config.kfac ? update : grad.gradients, opt_state, config.optimizer);

      const auto eval = forward(params, data.norm, data.first_input, Mode::kEval, dropout_rng);
      EpochRecord rec;
      rec.epoch = t;
      rec.train_cost = loss(eval, labels, train_w);
      rec.val_cost = loss(eval, labels, val_w);
      if (!std::isfinite(rec.train_cost) || !std::isfinite(rec.val_cost)) {
        throw NumericError("cost is not finite");
      }
      rec.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      if (rec.val_cost < metrics.best_val_cost) {
        metrics.best_val_cost = rec.val_cost;
        metrics.best_epoch = t;
        metrics.test_accuracy = accuracy(predict(eval), labels, mask.test);
      }
      metrics.epochs.push_back(rec);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(t) + ": " + e.what(), e.pivot());
    }
  }
  metrics.kfac_updates = kfac_state.update_count;
  metrics.total_ms = metrics.epochs.back().elapsed_ms;
  return metrics;
}

RunMetrics train_one(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const auto data = prepare_dataset(config.dataset, config.split_id, config.split_options);
  return train_one(*data, config, seed);
}

AggregateReport run_experiment(const PreparedDataset& data, const ExperimentConfig& config) {
  config.validate();
  if (data.split_id != config.split_id) {
    throw UsageError("run_experiment: dataset was prepared for split " +
                     std::to_string(data.split_id));
  }
  if (!config.output.empty()) {
    std::error_code ec;
    fs::create_directories(config.output, ec);
    if (ec) throw LoadError(config.output.string() + ": " + ec.message());
  }
  std::vector<RunMetrics> runs;
  for (auto seed : config.seeds) {
    runs.push_back(train_one(data, config, seed));
    if (!config.output.empty()) {
      write_run_csv(runs.back(), config.output / ("run_" + std::to_string(seed) + ".csv"));
    }
  }
  auto report = aggregate(config.method_name(), std::move(runs));
  if (!config.output.empty()) {
    write_report_json(report, config, config.output / "report.json");
    write_curves_csv(report, config.output / "curves.csv");
  }
  return report;
}

AggregateReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto data = prepare_dataset(config.dataset, config.split_id, config.split_options);
  return run_experiment(*data, config);
}

void write_run_csv(const RunMetrics& run, const fs::path& file) {
  auto out = open_output(file);
  out << "epoch,train_cost,val_cost,elapsed_ms\n";
  for (const auto& r : run.epochs) {
    out << r.epoch << ',' << number(r.train_cost) << ',' << number(r.val_cost) << ','
        << number(r.elapsed_ms) << '\n';
  }
  finish_output(out, file);
}

void write_report_json(const AggregateReport& report, const ExperimentConfig& config,
                       const fs::path& file) {
  json j;
  j["method"] = report.method;
  j["runs"] = report.runs.size();
  j["test_accuracy"] = summary_json(report.test_accuracy);
  j["best_val_cost"] = summary_json(report.best_val_cost);
  j["final_val_cost"] = summary_json(report.final_val_cost);
  j["total_ms"] = summary_json(report.total_ms);

  json cfg;
  cfg["dataset"] = config.dataset.string();
  cfg["split"] = config.split_id;
  cfg["epochs"] = config.epochs;
  cfg["hidden"] = config.hidden_dim;
  cfg["dropout"] = config.dropout;
  const auto& o = config.optimizer;
  cfg["optimizer"] = {{"kind", o.kind == OptimizerKind::kSgd ? "sgd" : "adam"},
                      {"lr", o.learning_rate},
                      {"momentum", o.momentum},
                      {"weight_decay", o.weight_decay},
                      {"beta1", o.beta1},
                      {"beta2", o.beta2},
                      {"adam_epsilon", o.adam_epsilon}};
  if (config.kfac) {
    const auto& k = *config.kfac;
    cfg["kfac"] = {{"mode", kfac_mode_name(k.mode)},
                   {"epsilon", k.epsilon},
                   {"gamma", k.gamma},
                   {"update_every", k.update_every},
                   {"weighting", k.weighting == FactorWeighting::kAlgorithm1Literal ? "literal"
                                                                                      : "cost"},
                   {"damping_exponent", k.damping_exponent}};
  } else {
    cfg["kfac"] = nullptr;
  }
  j["config"] = cfg;

  json per_run = json::array();
  for (const auto& r : report.runs) {
    per_run.push_back({{"seed", r.seed},
                       {"test_accuracy", r.test_accuracy},
                       {"best_val_cost", r.best_val_cost},
                       {"best_epoch", r.best_epoch},
                       {"final_val_cost", r.epochs.back().val_cost},
                       {"kfac_updates", r.kfac_updates},
                       {"total_ms", r.total_ms}});
  }
  j["per_run"] = per_run;

  auto out = open_output(file);
  out << j.dump(2) << '\n';
  finish_output(out, file);
}

void write_curves_csv(const AggregateReport& report, const fs::path& file) {
  auto out = open_output(file);
  out << "method,seed,epoch,elapsed_ms,series,value\n";
  for (const auto& run : report.runs) {
    for (const auto& r : run.epochs) {
      const auto prefix = report.method + ',' + std::to_string(run.seed) + ',' +
                          std::to_string(r.epoch) + ',' + number(r.elapsed_ms) + ',';
      out << prefix << "train_cost," << number(r.train_cost) << '\n';
      out << prefix << "val_cost," << number(r.val_cost) << '\n';
    }
  }
  finish_output(out, file);
}

}  // namespace ngcn
