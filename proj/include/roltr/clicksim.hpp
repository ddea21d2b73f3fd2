#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "roltr/episode.hpp"
#include "roltr/random.hpp"

namespace roltr {

/// Observation probability (1/k)^eta at rank k.
struct PropensityModel {
  double eta = 1.0;
};

double observation_probability(const PropensityModel& model, std::size_t rank);

enum class BehaviorKind { kPerfect, kNoisy, kDeterministicBinary };

/// P(click | observed, grade). Deterministic-binary is a test-only behavior
/// with noiseless clicks on any grade > 0; it matches the binary-relevance,
/// no-noise regime the unbiasedness arguments assume.
struct ClickBehavior {
  BehaviorKind kind = BehaviorKind::kPerfect;
  std::string name;
  std::array<double, 5> click_prob{};

  static ClickBehavior perfect();
  static ClickBehavior noisy();
  static ClickBehavior deterministic_binary();

  /// Accepts "perfect", "noisy", "detbin" / "deterministic-binary".
  static ClickBehavior from_name(std::string_view name);
};

struct ClickSimulator {
  PropensityModel propensity;
  ClickBehavior behavior = ClickBehavior::perfect();
};

/// Draws o_k ~ Bernoulli((1/k)^eta), then a click with probability
/// click_prob[grade] when observed.
std::vector<int> simulate_clicks(const Episode& episode, const PropensityModel& model,
                                 const ClickBehavior& behavior, Rng& rng);

inline std::vector<int> simulate_clicks(const Episode& episode, const ClickSimulator& sim, Rng& rng) {
  return simulate_clicks(episode, sim.propensity, sim.behavior, rng);
}

}  // namespace roltr
