#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ngcn/data.hpp"
#include "ngcn/gcn.hpp"
#include "ngcn/graph.hpp"
#include "ngcn/kfac.hpp"
#include "ngcn/optim.hpp"

namespace ngcn {

struct ExperimentConfig {
  std::filesystem::path dataset;
  int split_id = 1;
  SplitOptions split_options;
  OptimizerConfig optimizer;
  std::optional<KfacConfig> kfac;  // nullopt trains without preconditioning
  int epochs = 200;
  std::size_t hidden_dim = 64;
  double dropout = 0.5;
  std::vector<std::uint64_t> seeds{0};
  // Empty disables file output.
  std::filesystem::path output;

  void validate() const;
  // Short label such as "adam", "sgd-kfac_eps" or "adam-kfac_gamma".
  std::string method_name() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_cost = 0.0;
  double val_cost = 0.0;
  double elapsed_ms = 0.0;
};

struct RunMetrics {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  double best_val_cost = 0.0;
  int best_epoch = 0;  // first epoch reaching the minimum
  double test_accuracy = 0.0;  // at best_epoch, in [0, 1]
  std::size_t kfac_updates = 0;
  double total_ms = 0.0;
};

struct Summary {
  double mean = 0.0;
  // 1.96 sd / sqrt(runs) with the sample sd; empty for a single run.
  std::optional<double> half_width;
};

struct AggregateReport {
  std::string method;
  std::vector<RunMetrics> runs;
  Summary test_accuracy;
  Summary best_val_cost;
  Summary final_val_cost;
  Summary total_ms;
};

Summary summarize(std::span<const double> values);
AggregateReport aggregate(std::string method, std::vector<RunMetrics> runs);

/// Dataset state shared by every run on one (bundle, split): the graph,
/// the normalized adjacency, the aggregated layer-1 input and the masks.
struct PreparedDataset {
  GraphBundle bundle;
  NormalizedAdjacency norm;
  std::shared_ptr<const LayerInput> first_input;
  SplitMask mask;
  int split_id = 1;
};

std::shared_ptr<const PreparedDataset> prepare_dataset(const std::filesystem::path& dir,
                                                       int split_id,
                                                       const SplitOptions& options = {});
std::shared_ptr<const PreparedDataset> prepare_dataset(GraphBundle bundle, int split_id,
                                                       const SplitOptions& options = {});

/// One full training run. Each epoch: train-mode forward, backward on the
/// labeled nodes, KFAC refresh when (epoch - 1) % update_every == 0, optional
/// preconditioning, optimizer step, then an eval-mode forward for the
/// train and validation costs and the test accuracy.
///
/// Numeric failures are rethrown as NumericError naming the epoch.
RunMetrics train_one(const PreparedDataset& data, const ExperimentConfig& config,
                     std::uint64_t seed);
RunMetrics train_one(const ExperimentConfig& config, std::uint64_t seed);

/// Runs every seed, then writes <output>/run_<seed>.csv, report.json and
/// curves.csv when an output directory is set. I/O failures throw LoadError
/// naming the path.
AggregateReport run_experiment(const PreparedDataset& data, const ExperimentConfig& config);
AggregateReport run_experiment(const ExperimentConfig& config);

void write_run_csv(const RunMetrics& run, const std::filesystem::path& file);
void write_report_json(const AggregateReport& report, const ExperimentConfig& config,
                       const std::filesystem::path& file);
void write_curves_csv(const AggregateReport& report, const std::filesystem::path& file);

}  // namespace ngcn
