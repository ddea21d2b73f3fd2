#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "roltr/data.hpp"
#include "roltr/policy.hpp"
#include "roltr/random.hpp"

namespace roltr {

struct EpisodeStep {
  std::size_t rank = 1;                 // k = t + 1
  std::vector<std::size_t> state;       // unranked ordinals before this step, dataset order
  std::size_t action = 0;               // position of the choice inside `state`
  std::size_t chosen = 0;               // ordinal of the placed document
};

/// One ranking episode over a query's candidates. `candidates` views the
/// query's documents; the dataset must outlive the episode.
struct Episode {
  std::string query_id;
  std::span<const Document> candidates;
  std::vector<EpisodeStep> steps;
  std::vector<int> clicks;  // aligned with steps once feedback arrives

  std::size_t size() const { return steps.size(); }
  const Document& document(std::size_t t) const { return candidates[steps[t].chosen]; }
  bool has_clicks() const { return clicks.size() == steps.size() && !steps.empty(); }

  /// Grades of the displayed list, in display order.
  std::vector<int> displayed_grades() const;
};

/// Samples min(M, |candidates|) documents without replacement from the
/// policy's softmax, removing each choice from the state before the next.
Episode run_episode(const Policy& policy, const Query& query, std::size_t serp_size, Rng& rng);

}  // namespace roltr
