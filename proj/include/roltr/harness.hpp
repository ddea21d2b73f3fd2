#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roltr/data.hpp"
#include "roltr/learner.hpp"
#include "roltr/metrics.hpp"

namespace roltr {

struct LetorSource {
  std::filesystem::path train;
  std::filesystem::path test;
  std::optional<std::filesystem::path> validation;
  std::size_t feature_dim = 0;  // 0: infer from the training file
  bool normalize = false;
};

struct SweepAxes {
  std::vector<double> gamma;
  std::vector<RewardVariant> reward;
  std::vector<double> eta_model;
  bool skyline = false;  // add a full-information cell
};

struct ExperimentConfig {
  std::optional<LetorSource> letor;
  std::optional<SyntheticSpec> synthetic;
  // Synthetic data has no folds: run i uses generator seed spec.seed + i.
  bool per_run_data = true;

  std::string clicks = "perfect";
  double eta_true = 1.0;
  TrainConfig train;
  std::size_t runs = 15;
  std::size_t parallelism = 1;
  double tau = 0.9995;
  std::size_t smoothing_window = 100;
  SweepAxes sweep;
  std::filesystem::path out_dir = "roltr-out";

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const std::string& json_text);
std::string experiment_config_to_json(const ExperimentConfig& config);

/// One training configuration of a sweep.
struct Cell {
  std::string name;
  RewardSpec reward;
  bool skyline = false;
};

std::vector<Cell> expand_cells(const ExperimentConfig& config);

struct RunOutcome {
  std::uint64_t seed = 0;
  std::size_t run_index = 0;
  std::optional<std::string> error;
  MetricsLog log;
  double final_offline_ndcg = 0.0;
  double online_performance = 0.0;
  double mean_variance_trace = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

struct CellSummary {
  Cell cell;
  std::vector<RunOutcome> runs;
  Aggregate final_offline_ndcg;
  Aggregate online_performance;
  Aggregate variance_trace;

  /// Per-run values over successful runs.
  std::vector<double> final_offline_values() const;
  std::vector<double> online_performance_values() const;
  std::vector<double> variance_trace_values() const;
};

struct PairwiseTest {
  std::string cell_a;
  std::string cell_b;
  std::string metric;
  TTestResult result;
};

struct ExperimentSummary {
  std::vector<CellSummary> cells;
  std::vector<PairwiseTest> tests;

  const CellSummary& cell(const std::string& name) const;
  std::string to_json() const;
};

/// Training data for run `run_index`.
struct RunData {
  Dataset train;
  Dataset test;
};
RunData load_run_data(const ExperimentConfig& config, std::size_t run_index);

/// Executes runs x cells training runs on a bounded worker pool, writing
/// per-run CSVs under out_dir/runs/<cell>/seed_<n>/ and out_dir/summary.json.
/// A failing run is recorded in its outcome and does not stop its siblings.
ExperimentSummary run_experiment(const ExperimentConfig& config);

/// Trailing moving average; window 1 is the identity.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

/// Long-format curves `cell,seed,impression,metric,value` (raw and smoothed)
/// for every completed run found under out_dir/runs. Returns written files.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& out_dir,
                                                  std::size_t smoothing_window);

}  // namespace roltr
