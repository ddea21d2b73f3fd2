#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "roltr/data.hpp"
#include "roltr/random.hpp"

namespace roltr {

/// Linear scorer plus the step size used to update it. Treated as an
/// immutable snapshot: updates produce a new Policy.
struct Policy {
  std::vector<double> weights;
  double learning_rate = 0.01;

  /// All-zero weights, i.e. the uniform policy.
  static Policy zeros(std::size_t feature_dim, double learning_rate);

  std::size_t dim() const { return weights.size(); }

  friend bool operator==(const Policy&, const Policy&) = default;
};

struct ActionDistribution {
  std::vector<std::size_t> candidate_indices;  // ordinals into the query's candidates
  std::vector<double> probabilities;
};

double score(const Policy& policy, const Document& doc);
double score(std::span<const double> weights, std::span<const double> features);
std::vector<double> scores(const Policy& policy, std::span<const Document> candidates);

/// Softmax of the scores of all `candidates`.
ActionDistribution action_distribution(const Policy& policy, std::span<const Document> candidates);

/// Softmax restricted to `remaining`, given precomputed scores for the whole
/// candidate list. Max-subtracted so scores of magnitude 1e4 stay finite.
ActionDistribution action_distribution(std::span<const double> all_scores,
                                       std::span<const std::size_t> remaining);

/// Position in `dist` drawn with the stated probabilities.
std::size_t sample_action(const ActionDistribution& dist, Rng& rng);

/// Gradient of log pi(chosen) w.r.t. the weights for a linear scorer:
/// features(chosen) - sum_a pi(a) features(a). `chosen` indexes `candidates`.
std::vector<double> log_policy_gradient(const Policy& policy, std::span<const Document> candidates,
                                        std::size_t chosen);

/// Same gradient for an action taken from `dist`; `chosen` indexes `dist`.
std::vector<double> log_policy_gradient(const ActionDistribution& dist,
                                        std::span<const Document> candidates, std::size_t chosen);

std::string policy_to_json(const Policy& policy);
Policy policy_from_json(const std::string& json_text);
void save_policy(const std::filesystem::path& path, const Policy& policy);
Policy load_policy(const std::filesystem::path& path);

}  // namespace roltr
