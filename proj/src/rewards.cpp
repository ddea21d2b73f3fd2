#include "roltr/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "roltr/clicksim.hpp"

namespace roltr {

std::string_view to_string(RewardVariant variant) {
  switch (variant) {
    case RewardVariant::kDcg: return "dcg";
    case RewardVariant::kNaivePos: return "naive+";
    case RewardVariant::kIpsPos: return "ips+";
    case RewardVariant::kNaiveNeg: return "naive-";
    case RewardVariant::kIpsNeg: return "ips-";
    case RewardVariant::kNaiveBoth: return "naive+-";
    case RewardVariant::kIpsBoth: return "ips+-";
  }
  return "unknown";
}

RewardVariant parse_reward_variant(std::string_view name) {
  for (auto v : {RewardVariant::kDcg, RewardVariant::kNaivePos, RewardVariant::kIpsPos,
                 RewardVariant::kNaiveNeg, RewardVariant::kIpsNeg, RewardVariant::kNaiveBoth,
                 RewardVariant::kIpsBoth}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown reward variant '" + std::string(name) + "'");
}

void RewardSpec::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(eta_model >= 0.0) || !std::isfinite(eta_model)) {
    throw std::invalid_argument("eta_model must be a finite non-negative number");
  }
  if (max_ips_weight && !(*max_ips_weight >= 1.0)) {
    throw std::invalid_argument("max_ips_weight must be >= 1");
  }
}

double dcg_weight(std::size_t t) { return 1.0 / std::log2(static_cast<double>(t) + 2.0); }

double model_propensity(const RewardSpec& spec, std::size_t t) {
  double p = observation_probability(PropensityModel{spec.eta_model}, t + 1);
  if (spec.max_ips_weight) p = std::max(p, 1.0 / *spec.max_ips_weight);
  if (!(p > 0.0) || !std::isfinite(1.0 / p)) {
    throw std::invalid_argument(fmt::format(
        "model propensity underflows at rank {} with eta_model={}", t + 1, spec.eta_model));
  }
  return p;
}

StepReward step_reward(const RewardSpec& spec, std::size_t t, int signal) {
  if (signal != 0 && signal != 1) throw std::invalid_argument("click/label must be 0 or 1");
  const double lambda = dcg_weight(t);
  const double c = signal;

  auto ips_pos = [&] { return lambda * c / model_propensity(spec, t); };
  auto ips_neg = [&] {
    const double p = model_propensity(spec, t);
    return lambda * (c - 1.0) + (1.0 - p) / p * lambda * c;
  };

  double value = 0.0;
  switch (spec.variant) {
    case RewardVariant::kDcg: value = lambda * c; break;
    case RewardVariant::kNaivePos: value = lambda * c; break;
    case RewardVariant::kIpsPos: value = ips_pos(); break;
    case RewardVariant::kNaiveNeg: value = lambda * (c - 1.0); break;
    case RewardVariant::kIpsNeg: value = ips_neg(); break;
    case RewardVariant::kNaiveBoth: value = lambda * c + lambda * (c - 1.0); break;
    case RewardVariant::kIpsBoth: value = ips_pos() + ips_neg(); break;
  }
  return {t, value};
}

std::vector<StepReward> step_rewards(const RewardSpec& spec, std::span<const int> signals) {
  std::vector<StepReward> out;
  out.reserve(signals.size());
  for (std::size_t t = 0; t < signals.size(); ++t) out.push_back(step_reward(spec, t, signals[t]));
  return out;
}

std::vector<double> discounted_returns(double gamma, std::span<const StepReward> rewards) {
  std::vector<double> g(rewards.size());
  double running = 0.0;
  for (std::size_t m = rewards.size(); m-- > 0;) {
    running = rewards[m].value + gamma * running;
    g[m] = running;
  }
  return g;
}

double episode_return(const RewardSpec& spec, std::span<const StepReward> rewards, std::size_t t) {
  if (t >= rewards.size()) throw std::out_of_range("start step beyond the episode");
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t m = t; m < rewards.size(); ++m) {
    total += discount * rewards[m].value;
    discount *= spec.gamma;
  }
  return total;
}

double MonteCarloEstimate::std_error() const {
  return trials > 0 ? sample_std / std::sqrt(static_cast<double>(trials)) : 0.0;
}

MonteCarloEstimate expected_return_oracle(std::span<const int> labels, RewardVariant variant,
                                          double eta_true, double eta_model, std::size_t n_trials,
                                          Rng& rng) {
  if (n_trials == 0) throw std::invalid_argument("n_trials must be >= 1");
  const RewardSpec spec{variant, 1.0, eta_model, std::nullopt};
  spec.validate();
  const PropensityModel truth{eta_true};

  std::vector<int> clicks(labels.size());
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    double delta = 0.0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
      if (variant == RewardVariant::kDcg) {
        clicks[t] = labels[t];
      } else {
        const bool observed = bernoulli(rng, observation_probability(truth, t + 1));
        clicks[t] = observed && labels[t] != 0 ? 1 : 0;
      }
      delta += step_reward(spec, t, clicks[t]).value;
    }
    // Welford update.
    const double d = delta - mean;
    mean += d / static_cast<double>(trial + 1);
    m2 += d * (delta - mean);
  }
  MonteCarloEstimate est;
  est.mean = mean;
  est.trials = n_trials;
  est.sample_std = n_trials > 1 ? std::sqrt(m2 / static_cast<double>(n_trials - 1)) : 0.0;
  return est;
}

}  // namespace roltr
