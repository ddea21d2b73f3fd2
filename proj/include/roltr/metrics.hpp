#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "roltr/data.hpp"
#include "roltr/policy.hpp"

namespace roltr {

struct MetricsLog {
  std::vector<double> online_ndcg;                          // one per impression
  std::vector<std::pair<std::size_t, double>> offline_ndcg;  // (impressions seen, test nDCG@10)
  std::vector<std::pair<std::size_t, double>> variance_trace;  // (window index, trace)

  friend bool operator==(const MetricsLog&, const MetricsLog&) = default;
};

enum class Gain { kExponential, kLinear };

/// nDCG@k of `ranking` (grades in display order) against the ideal ordering
/// of the same grades. 0 when the ideal DCG is 0.
double ndcg_at_k(std::span<const int> ranking, std::size_t k, Gain gain = Gain::kExponential);

/// nDCG@k of a displayed prefix against the ideal ordering of the full
/// candidate pool it was drawn from.
double ndcg_at_k(std::span<const int> displayed, std::span<const int> pool, std::size_t k,
                 Gain gain = Gain::kExponential);

/// sum_i tau^i * ndcg_i, i from 0.
double online_performance(std::span<const double> per_impression_ndcg, double tau);

/// Candidate ordinals sorted by descending score; ties keep dataset order.
std::vector<std::size_t> greedy_ranking(const Policy& policy, const Query& query);

/// Mean greedy nDCG@k over the test queries.
double offline_performance(const Policy& policy, const Dataset& test, std::size_t k = 10,
                           Gain gain = Gain::kExponential);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

/// Welch's unequal-variance t-test, two-sided.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> xs);
double sample_std(std::span<const double> xs);
double median(std::vector<double> xs);

void write_online_csv(std::ostream& out, const MetricsLog& log);
void write_offline_csv(std::ostream& out, const MetricsLog& log);
void write_variance_csv(std::ostream& out, const MetricsLog& log);

}  // namespace roltr
