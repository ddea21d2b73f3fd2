#include "roltr/clicksim.hpp"

#include <cmath>
#include <stdexcept>

namespace roltr {

double observation_probability(const PropensityModel& model, std::size_t rank) {
  if (rank < 1) throw std::invalid_argument("rank must be >= 1");
  if (!(model.eta >= 0.0)) throw std::invalid_argument("propensity eta must be non-negative");
  return std::pow(1.0 / static_cast<double>(rank), model.eta);
}

ClickBehavior ClickBehavior::perfect() {
  return {BehaviorKind::kPerfect, "perfect", {0.0, 0.2, 0.4, 0.8, 1.0}};
}

ClickBehavior ClickBehavior::noisy() {
  return {BehaviorKind::kNoisy, "noisy", {0.4, 0.6, 0.7, 0.8, 0.9}};
}

ClickBehavior ClickBehavior::deterministic_binary() {
  return {BehaviorKind::kDeterministicBinary, "detbin", {0.0, 1.0, 1.0, 1.0, 1.0}};
}

ClickBehavior ClickBehavior::from_name(std::string_view name) {
  if (name == "perfect") return perfect();
  if (name == "noisy") return noisy();
  if (name == "detbin" || name == "deterministic-binary") return deterministic_binary();
  throw std::invalid_argument("unknown click behavior '" + std::string(name) + "'");
}

std::vector<int> simulate_clicks(const Episode& episode, const PropensityModel& model,
                                 const ClickBehavior& behavior, Rng& rng) {
  std::vector<int> clicks(episode.size(), 0);
  for (std::size_t t = 0; t < episode.size(); ++t) {
    const int grade = episode.document(t).relevance;
    if (!bernoulli(rng, observation_probability(model, episode.steps[t].rank))) continue;
    if (behavior.kind == BehaviorKind::kDeterministicBinary) {
      clicks[t] = grade > 0 ? 1 : 0;
    } else {
      clicks[t] = bernoulli(rng, behavior.click_prob.at(static_cast<std::size_t>(grade))) ? 1 : 0;
    }
  }
  return clicks;
}

}  // namespace roltr
