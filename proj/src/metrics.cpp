#include "roltr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

namespace roltr {

namespace {

double gain_of(int grade, Gain gain) {
  return gain == Gain::kExponential ? std::exp2(grade) - 1.0 : static_cast<double>(grade);
}

// Discount for 0-based position i, i.e. 1 / log2(rank + 1).
double position_discount(std::size_t i) { return 1.0 / std::log2(static_cast<double>(i) + 2.0); }

double dcg(std::span<const int> grades, std::size_t k, Gain gain) {
  double total = 0.0;
  const std::size_t n = std::min(k, grades.size());
  for (std::size_t i = 0; i < n; ++i) total += gain_of(grades[i], gain) * position_discount(i);
  return total;
}

double ideal_dcg(std::span<const int> pool, std::size_t k, Gain gain) {
  std::vector<int> sorted(pool.begin(), pool.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return dcg(sorted, k, gain);
}

}  // namespace

double ndcg_at_k(std::span<const int> displayed, std::span<const int> pool, std::size_t k, Gain gain) {
  if (k == 0) throw std::invalid_argument("nDCG cutoff k must be >= 1");
  const double ideal = ideal_dcg(pool, k, gain);
  if (ideal <= 0.0) return 0.0;
  return std::min(1.0, dcg(displayed, k, gain) / ideal);
}

double ndcg_at_k(std::span<const int> ranking, std::size_t k, Gain gain) {
  return ndcg_at_k(ranking, ranking, k, gain);
}

double online_performance(std::span<const double> per_impression_ndcg, double tau) {
  double total = 0.0;
  double weight = 1.0;
  for (double v : per_impression_ndcg) {
    total += weight * v;
    weight *= tau;
  }
  return total;
}

std::vector<std::size_t> greedy_ranking(const Policy& policy, const Query& query) {
  const auto s = scores(policy, query.candidates);
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  return order;
}

double offline_performance(const Policy& policy, const Dataset& test, std::size_t k, Gain gain) {
  if (test.queries.empty()) throw std::invalid_argument("offline evaluation needs a non-empty test set");
  double total = 0.0;
  std::vector<int> displayed;
  std::vector<int> pool;
  for (const auto& q : test.queries) {
    const auto order = greedy_ranking(policy, q);
    displayed.clear();
    pool.clear();
    for (auto i : order) displayed.push_back(q.candidates[i].relevance);
    for (const auto& d : q.candidates) pool.push_back(d.relevance);
    total += ndcg_at_k(displayed, pool, k, gain);
  }
  return total / static_cast<double>(test.queries.size());
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("Welch test needs >= 2 values per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = std::pow(sample_std(a), 2);
  const double vb = std::pow(sample_std(b), 2);
  const double sa = va / na;
  const double sb = vb / nb;
  const double se2 = sa + sb;

  TTestResult r;
  if (se2 <= 0.0) {
    r.df = na + nb - 2.0;
    if (ma == mb) return {0.0, r.df, 1.0};
    r.t = ma > mb ? INFINITY : -INFINITY;
    r.p_value = 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

void write_online_csv(std::ostream& out, const MetricsLog& log) {
  out << "impression,online_ndcg\n";
  for (std::size_t i = 0; i < log.online_ndcg.size(); ++i) {
    out << fmt::format("{},{}\n", i, log.online_ndcg[i]);
  }
}

void write_offline_csv(std::ostream& out, const MetricsLog& log) {
  out << "impression,offline_ndcg\n";
  for (const auto& [i, v] : log.offline_ndcg) out << fmt::format("{},{}\n", i, v);
}

void write_variance_csv(std::ostream& out, const MetricsLog& log) {
  out << "window,variance_trace\n";
  for (const auto& [w, v] : log.variance_trace) out << fmt::format("{},{}\n", w, v);
}

}  // namespace roltr
