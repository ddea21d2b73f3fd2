#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "roltr/clicksim.hpp"
#include "roltr/data.hpp"
#include "roltr/episode.hpp"
#include "roltr/metrics.hpp"
#include "roltr/policy.hpp"
#include "roltr/rewards.hpp"

namespace roltr {

struct TrainConfig {
  RewardSpec reward;
  std::size_t serp_size = 10;
  std::size_t impressions = 10000;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1000;
  std::size_t variance_window = 1000;
  std::size_t ndcg_cutoff = 10;
  Gain gain = Gain::kExponential;
  // When set, the policy is written here as JSON at every evaluation point.
  std::optional<std::filesystem::path> checkpoint_dir;

  void validate() const;
};

/// Per-episode gradients of the most recent episodes, up to `capacity`.
class GradientWindow {
 public:
  explicit GradientWindow(std::size_t capacity) : capacity_(capacity) {}

  void push(std::vector<double> gradient);
  bool full() const { return vectors_.size() >= capacity_; }
  void clear() { vectors_.clear(); }
  std::size_t size() const { return vectors_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<std::vector<double>>& vectors() const { return vectors_; }

 private:
  std::size_t capacity_;
  std::vector<std::vector<double>> vectors_;
};

/// Trace of the sample covariance (1/(W-1) normalisation) of the window.
double gradient_variance(const GradientWindow& window);
double gradient_variance(std::span<const std::vector<double>> gradients);

/// Non-finite update; the run is aborted rather than clipped.
class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// sum_t G_t * grad log pi(a_t | s_t), with G_t the gamma-discounted return of
/// the step rewards computed from `episode.clicks`. Does not touch the policy.
std::vector<double> episode_gradient(const Policy& policy, const Episode& episode, const RewardSpec& spec);

/// theta + learning_rate * gradient, as a new snapshot.
Policy apply_update(const Policy& policy, std::span<const double> gradient);

struct TrainResult {
  Policy policy;
  MetricsLog log;
};

/// Online training from simulated clicks. Offline nDCG is logged at
/// impression 0, every eval_every impressions and after the last one.
TrainResult train_online(const TrainConfig& config, const Dataset& train, const Dataset& test,
                         const ClickSimulator& simulator);

/// The same loop with binarised relevance labels (grade > 0) in place of
/// clicks. The reward variant is forced to dcg.
TrainResult train_offline_skyline(const TrainConfig& config, const Dataset& train, const Dataset& test);

}  // namespace roltr
