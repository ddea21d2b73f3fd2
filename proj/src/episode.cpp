#include "roltr/episode.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace roltr {

std::vector<int> Episode::displayed_grades() const {
  std::vector<int> grades;
  grades.reserve(steps.size());
  for (const auto& s : steps) grades.push_back(candidates[s.chosen].relevance);
  return grades;
}

Episode run_episode(const Policy& policy, const Query& query, std::size_t serp_size, Rng& rng) {
  if (serp_size == 0) throw std::invalid_argument("SERP size must be at least 1");
  if (query.candidates.empty()) throw std::invalid_argument("query '" + query.query_id + "' has no candidates");

  Episode ep;
  ep.query_id = query.query_id;
  ep.candidates = query.candidates;

  const auto all_scores = scores(policy, query.candidates);
  std::vector<std::size_t> remaining(query.candidates.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});

  const std::size_t depth = std::min(serp_size, remaining.size());
  ep.steps.reserve(depth);
  for (std::size_t t = 0; t < depth; ++t) {
    const auto dist = action_distribution(all_scores, remaining);
    const std::size_t action = sample_action(dist, rng);
    EpisodeStep step;
    step.rank = t + 1;
    step.state = remaining;
    step.action = action;
    step.chosen = remaining[action];
    ep.steps.push_back(std::move(step));
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(action));
  }
  return ep;
}

}  // namespace roltr
