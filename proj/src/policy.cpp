#include "roltr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

namespace roltr {

Policy Policy::zeros(std::size_t feature_dim, double learning_rate) {
  if (feature_dim == 0) throw std::invalid_argument("policy dimensionality must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  return Policy{std::vector<double>(feature_dim, 0.0), learning_rate};
}

double score(std::span<const double> weights, std::span<const double> features) {
  if (weights.size() != features.size()) {
    throw std::invalid_argument(fmt::format("dimensionality mismatch: {} weights, {} features",
                                            weights.size(), features.size()));
  }
  return std::inner_product(weights.begin(), weights.end(), features.begin(), 0.0);
}

double score(const Policy& policy, const Document& doc) { return score(policy.weights, doc.features); }

std::vector<double> scores(const Policy& policy, std::span<const Document> candidates) {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& d : candidates) out.push_back(score(policy, d));
  return out;
}

ActionDistribution action_distribution(std::span<const double> all_scores,
                                       std::span<const std::size_t> remaining) {
  if (remaining.empty()) throw std::invalid_argument("empty candidate set");
  ActionDistribution dist;
  dist.candidate_indices.assign(remaining.begin(), remaining.end());
  dist.probabilities.resize(remaining.size());

  double top = -INFINITY;
  for (auto i : remaining) top = std::max(top, all_scores[i]);
  double total = 0.0;
  for (std::size_t j = 0; j < remaining.size(); ++j) {
    dist.probabilities[j] = std::exp(all_scores[remaining[j]] - top);
    total += dist.probabilities[j];
  }
  for (auto& p : dist.probabilities) p /= total;
  return dist;
}

ActionDistribution action_distribution(const Policy& policy, std::span<const Document> candidates) {
  if (candidates.empty()) throw std::invalid_argument("empty candidate set");
  const auto s = scores(policy, candidates);
  std::vector<std::size_t> all(candidates.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return action_distribution(s, all);
}

std::size_t sample_action(const ActionDistribution& dist, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (std::size_t j = 0; j < dist.probabilities.size(); ++j) {
    cumulative += dist.probabilities[j];
    if (u < cumulative) return j;
  }
  // u landed in the rounding gap above the final cumulative sum.
  for (std::size_t j = dist.probabilities.size(); j-- > 0;) {
    if (dist.probabilities[j] > 0.0) return j;
  }
  return dist.probabilities.size() - 1;
}

std::vector<double> log_policy_gradient(const ActionDistribution& dist,
                                        std::span<const Document> candidates, std::size_t chosen) {
  if (chosen >= dist.candidate_indices.size()) throw std::out_of_range("chosen action out of range");
  const auto& picked = candidates[dist.candidate_indices[chosen]].features;
  std::vector<double> grad(picked.begin(), picked.end());
  for (std::size_t j = 0; j < dist.candidate_indices.size(); ++j) {
    const auto& x = candidates[dist.candidate_indices[j]].features;
    if (x.size() != grad.size()) throw std::invalid_argument("dimensionality mismatch among candidates");
    const double p = dist.probabilities[j];
    for (std::size_t f = 0; f < grad.size(); ++f) grad[f] -= p * x[f];
  }
  return grad;
}

std::vector<double> log_policy_gradient(const Policy& policy, std::span<const Document> candidates,
                                        std::size_t chosen) {
  if (chosen >= candidates.size()) throw std::out_of_range("chosen action out of range");
  const auto dist = action_distribution(policy, candidates);
  return log_policy_gradient(dist, candidates, chosen);
}

std::string policy_to_json(const Policy& policy) {
  nlohmann::json j;
  j["weights"] = policy.weights;
  j["lr"] = policy.learning_rate;
  return j.dump();
}

Policy policy_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  Policy p;
  p.weights = j.at("weights").get<std::vector<double>>();
  p.learning_rate = j.value("lr", 0.01);
  if (p.weights.empty()) throw std::invalid_argument("policy has no weights");
  for (double w : p.weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("policy weights must be finite");
  }
  return p;
}

void save_policy(const std::filesystem::path& path, const Policy& policy) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << policy_to_json(policy) << '\n';
}

Policy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return policy_from_json(ss.str());
}

}  // namespace roltr
