#include "roltr/learner.hpp"

#include <cmath>
#include <functional>

#include <fmt/format.h>

namespace roltr {

void TrainConfig::validate() const {
  reward.validate();
  if (serp_size == 0) throw std::invalid_argument("serp_size must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (eval_every == 0) throw std::invalid_argument("eval_every must be positive");
  if (variance_window < 2) throw std::invalid_argument("variance_window must be >= 2");
  if (ndcg_cutoff == 0) throw std::invalid_argument("nDCG cutoff must be positive");
}

void GradientWindow::push(std::vector<double> gradient) {
  if (!vectors_.empty() && gradient.size() != vectors_.front().size()) {
    throw std::invalid_argument("gradient dimensionality changed inside a window");
  }
  if (vectors_.size() >= capacity_) vectors_.erase(vectors_.begin());
  vectors_.push_back(std::move(gradient));
}

double gradient_variance(std::span<const std::vector<double>> gradients) {
  if (gradients.size() < 2) throw std::invalid_argument("gradient variance needs at least 2 vectors");
  const std::size_t dim = gradients.front().size();
  const double n = static_cast<double>(gradients.size());
  std::vector<double> mu(dim, 0.0);
  for (const auto& g : gradients) {
    for (std::size_t f = 0; f < dim; ++f) mu[f] += g[f];
  }
  for (auto& m : mu) m /= n;
  double trace = 0.0;
  for (const auto& g : gradients) {
    for (std::size_t f = 0; f < dim; ++f) trace += (g[f] - mu[f]) * (g[f] - mu[f]);
  }
  return trace / (n - 1.0);
}

double gradient_variance(const GradientWindow& window) { return gradient_variance(window.vectors()); }

std::vector<double> episode_gradient(const Policy& policy, const Episode& episode, const RewardSpec& spec) {
  if (episode.steps.empty()) throw std::invalid_argument("episode has no steps");
  if (episode.clicks.size() != episode.steps.size()) {
    throw std::invalid_argument(fmt::format("{} clicks for {} steps", episode.clicks.size(), episode.steps.size()));
  }
  const auto rewards = step_rewards(spec, episode.clicks);
  const auto returns = discounted_returns(spec.gamma, rewards);
  const auto all_scores = scores(policy, episode.candidates);

  std::vector<double> total(policy.dim(), 0.0);
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    if (returns[t] == 0.0) continue;
    const auto& step = episode.steps[t];
    const auto dist = action_distribution(all_scores, step.state);
    const auto g = log_policy_gradient(dist, episode.candidates, step.action);
    for (std::size_t f = 0; f < total.size(); ++f) total[f] += returns[t] * g[f];
  }
  return total;
}

Policy apply_update(const Policy& policy, std::span<const double> gradient) {
  if (gradient.size() != policy.dim()) {
    throw std::invalid_argument(fmt::format("gradient has {} entries, policy {}", gradient.size(), policy.dim()));
  }
  for (std::size_t f = 0; f < gradient.size(); ++f) {
    if (!std::isfinite(gradient[f])) {
      throw NonFiniteGradient(fmt::format("non-finite gradient component {} = {}; check eta_model / IPS weights",
                                          f, gradient[f]));
    }
  }
  Policy next = policy;
  for (std::size_t f = 0; f < gradient.size(); ++f) next.weights[f] += policy.learning_rate * gradient[f];
  return next;
}

namespace {

using Feedback = std::function<std::vector<int>(const Episode&)>;

TrainResult train_loop(const TrainConfig& config, const RewardSpec& reward, const Dataset& train,
                       const Dataset& test, const Feedback& feedback) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("training set is empty");
  if (test.empty()) throw std::invalid_argument("test set is empty");
  if (train.feature_dim != test.feature_dim) {
    throw std::invalid_argument(fmt::format("train has {} features, test {}", train.feature_dim, test.feature_dim));
  }
  if (config.checkpoint_dir) std::filesystem::create_directories(*config.checkpoint_dir);

  Rng query_rng = make_stream(config.seed, 1);
  Rng action_rng = make_stream(config.seed, 2);

  TrainResult result{Policy::zeros(train.feature_dim, config.learning_rate), {}};
  auto& policy = result.policy;
  auto& log = result.log;
  log.online_ndcg.reserve(config.impressions);

  auto evaluate = [&](std::size_t seen) {
    log.offline_ndcg.emplace_back(seen, offline_performance(policy, test, config.ndcg_cutoff, config.gain));
    if (config.checkpoint_dir) {
      save_policy(*config.checkpoint_dir / fmt::format("policy_{:08d}.json", seen), policy);
    }
  };

  GradientWindow window(config.variance_window);
  std::size_t window_index = 0;
  std::vector<int> pool;

  evaluate(0);
  for (std::size_t i = 0; i < config.impressions; ++i) {
    const Query& query = sample_query(train, query_rng);
    Episode ep = run_episode(policy, query, config.serp_size, action_rng);

    pool.clear();
    for (const auto& d : query.candidates) pool.push_back(d.relevance);
    log.online_ndcg.push_back(ndcg_at_k(ep.displayed_grades(), pool, config.ndcg_cutoff, config.gain));

    ep.clicks = feedback(ep);
    auto grad = episode_gradient(policy, ep, reward);
    policy = apply_update(policy, grad);

    window.push(std::move(grad));
    if (window.full()) {
      log.variance_trace.emplace_back(window_index++, gradient_variance(window));
      window.clear();
    }
    if ((i + 1) % config.eval_every == 0) evaluate(i + 1);
  }
  if (config.impressions % config.eval_every != 0) evaluate(config.impressions);
  return result;
}

}  // namespace

TrainResult train_online(const TrainConfig& config, const Dataset& train, const Dataset& test,
                         const ClickSimulator& simulator) {
  Rng click_rng = make_stream(config.seed, 3);
  return train_loop(config, config.reward, train, test,
                    [&](const Episode& ep) { return simulate_clicks(ep, simulator, click_rng); });
}

TrainResult train_offline_skyline(const TrainConfig& config, const Dataset& train, const Dataset& test) {
  RewardSpec reward = config.reward;
  reward.variant = RewardVariant::kDcg;
  return train_loop(config, reward, train, test, [](const Episode& ep) {
    std::vector<int> labels(ep.size());
    for (std::size_t t = 0; t < ep.size(); ++t) labels[t] = ep.document(t).relevance > 0 ? 1 : 0;
    return labels;
  });
}

}  // namespace roltr
