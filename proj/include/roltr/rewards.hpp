#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roltr/random.hpp"

namespace roltr {

enum class RewardVariant {
  kDcg,        // full information: binary relevance labels
  kNaivePos,   // clicks as labels
  kIpsPos,     // clicks reweighted by inverse propensity
  kNaiveNeg,   // penalise unclicked documents
  kIpsNeg,     // negative reward with propensity correction
  kNaiveBoth,  // kNaivePos + kNaiveNeg
  kIpsBoth,    // kIpsPos + kIpsNeg
};

/// CLI names: dcg, naive+, ips+, naive-, ips-, naive+-, ips+-.
std::string_view to_string(RewardVariant variant);
RewardVariant parse_reward_variant(std::string_view name);

struct RewardSpec {
  RewardVariant variant = RewardVariant::kIpsBoth;
  double gamma = 0.0;      // discount in [0, 1]
  double eta_model = 1.0;  // the learner's assumed propensity exponent
  // Optional cap on 1/p. Unset means no clipping.
  std::optional<double> max_ips_weight;

  void validate() const;
};

struct StepReward {
  std::size_t t = 0;
  double value = 0.0;
};

/// DCG position weight 1 / log2(t + 2).
double dcg_weight(std::size_t t);

/// The learner's propensity for time step t (rank t + 1), after clipping.
/// Throws std::invalid_argument when it underflows to zero.
double model_propensity(const RewardSpec& spec, std::size_t t);

/// `signal` is the click for click-based variants and the binary relevance
/// label for kDcg.
StepReward step_reward(const RewardSpec& spec, std::size_t t, int signal);

/// Step rewards for a whole displayed list.
std::vector<StepReward> step_rewards(const RewardSpec& spec, std::span<const int> signals);

/// G_t = sum_{m >= t} gamma^(m - t) * value_m.
double episode_return(const RewardSpec& spec, std::span<const StepReward> rewards, std::size_t t);

/// G_t for every t in one backward pass.
std::vector<double> discounted_returns(double gamma, std::span<const StepReward> rewards);

struct MonteCarloEstimate {
  double mean = 0.0;
  double sample_std = 0.0;
  std::size_t trials = 0;

  double std_error() const;
};

/// Averages the undiscounted episode return of `variant` over `n_trials`
/// observation draws at eta_true with noiseless binary clicks (click iff
/// observed and relevant); rewards use eta_model.
MonteCarloEstimate expected_return_oracle(std::span<const int> labels, RewardVariant variant,
                                          double eta_true, double eta_model, std::size_t n_trials,
                                          Rng& rng);

}  // namespace roltr
