// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "oracles.hpp"
#include "roltr/harness.hpp"

using namespace roltr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Shared synthetic setting for the learning-curve criteria.
SyntheticSpec learning_spec() {
  SyntheticSpec s;
  s.n_queries = 300;
  s.docs_per_query = 50;
  s.feature_dim = 50;
  s.noise_scale = 1.0;
  s.clutter_scale = 4.0;
  s.seed = 100;
  s.n_test_queries = 100;
  return s;
}

ExperimentConfig learning_config(const fs::path& out, const std::string& clicks, std::size_t impressions) {
  ExperimentConfig c;
  c.synthetic = learning_spec();
  c.clicks = clicks;
  c.train.impressions = impressions;
  c.train.learning_rate = 2e-4;
  c.train.eval_every = 1000;
  c.train.variance_window = 1000;
  c.train.seed = 0;
  c.runs = 15;
  c.parallelism = std::max(1u, std::thread::hardware_concurrency());
  c.out_dir = out;
  fs::remove_all(out);
  return c;
}

std::vector<int> random_labels(Rng& rng) {
  std::vector<int> y(1 + uniform_index(rng, 10));
  for (auto& v : y) v = bernoulli(rng, 0.5) ? 1 : 0;
  return y;
}

bool within(double est, double truth, double se) { return std::abs(est - truth) <= std::max(3.0 * se, 1e-12); }

constexpr std::size_t kTrials = 100000;

Outcome unbiasedness(RewardVariant ips, RewardVariant naive, double (*closed)(const std::vector<int>&),
                     double ips_instance, double naive_instance, std::uint64_t seed) {
  Rng gen(seed), rng(seed + 1);
  int ok = 0;
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const auto y = random_labels(gen);
    const auto est = expected_return_oracle(y, ips, 1.0, 1.0, kTrials, rng);
    const double truth = closed(y);
    ok += within(est.mean, truth, est.std_error());
    if (est.std_error() > 0) worst = std::max(worst, std::abs(est.mean - truth) / est.std_error());
  }
  const std::vector<int> inst{1, 0, 1};
  const auto a = expected_return_oracle(inst, ips, 1.0, 1.0, kTrials, rng);
  const auto b = expected_return_oracle(inst, naive, 1.0, 1.0, kTrials, rng);
  const bool inst_ok = within(a.mean, ips_instance, a.std_error()) && within(b.mean, naive_instance, b.std_error());
  return {ok == 50 && inst_ok,
          fmt::format("{}/50 rankings within 3 SE (max |z|={:.2f}); [1,0,1]: {} {:.4f} (expect {:.6f}), {} {:.4f} "
                      "(expect {:.6f})",
                      ok, worst, to_string(ips), a.mean, ips_instance, to_string(naive), b.mean, naive_instance)};
}

Outcome criterion1() {
  return unbiasedness(RewardVariant::kIpsPos, RewardVariant::kNaivePos, oracle::expected_dcg, 1.5,
                      1.0 + 0.5 / 3.0, 1);
}

Outcome criterion2() {
  const double l1 = oracle::lambda(1);
  return unbiasedness(RewardVariant::kIpsNeg, RewardVariant::kNaiveNeg, oracle::expected_neg_dcg, -l1,
                      -l1 - (2.0 / 3.0) * 0.5, 2);
}

Outcome criterion3() {
  Rng rng(3);
  int ok = 0;
  double worst = 0;
  const int instances = 200;
  for (int i = 0; i < instances; ++i) {
    const std::size_t dim = 1 + uniform_index(rng, 8), n = 2 + uniform_index(rng, 12);
    std::vector<double> w(dim);
    for (auto& v : w) v = 4.0 * (uniform01(rng) - 0.5);
    std::vector<Document> c;
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> x(dim);
      for (auto& v : x) v = 2.0 * (uniform01(rng) - 0.5);
      c.push_back(oracle::doc(x));
    }
    const std::size_t a = uniform_index(rng, n);
    const auto g = log_policy_gradient(Policy{w, 0.01}, c, a);
    const auto fd = oracle::fd_gradient(w, c, a, 1e-6);
    double err = 0;
    for (std::size_t f = 0; f < dim; ++f) err = std::max(err, std::abs(g[f] - fd[f]));
    worst = std::max(worst, err);
    ok += err <= 1e-5;
  }

  // Monte Carlo mean of the score function under the policy.
  int coords = 0, coords_ok = 0;
  for (int inst = 0; inst < 5; ++inst) {
    const std::size_t dim = 4, n = 8;
    std::vector<double> w(dim);
    for (auto& v : w) v = uniform01(rng) - 0.5;
    std::vector<Document> c;
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> x(dim);
      for (auto& v : x) v = 3.0 * (uniform01(rng) - 0.5);
      c.push_back(oracle::doc(x));
    }
    const Policy p{w, 0.01};
    const auto dist = action_distribution(p, c);
    std::vector<std::vector<double>> grads;
    for (std::size_t a = 0; a < n; ++a) grads.push_back(log_policy_gradient(p, c, a));
    std::vector<double> sum(dim, 0), sq(dim, 0);
    const std::size_t samples = 100000;
    for (std::size_t s = 0; s < samples; ++s) {
      const auto& g = grads[sample_action(dist, rng)];
      for (std::size_t f = 0; f < dim; ++f) sum[f] += g[f], sq[f] += g[f] * g[f];
    }
    for (std::size_t f = 0; f < dim; ++f) {
      const double m = sum[f] / samples;
      const double sd = std::sqrt(std::max(0.0, sq[f] / samples - m * m));
      ++coords;
      coords_ok += std::abs(m) <= 5.0 * sd / std::sqrt(static_cast<double>(samples));
    }
  }
  return {ok == instances && coords_ok == coords,
          fmt::format("{}/{} finite-difference instances within 1e-5 (max err {:.2e}); {}/{} score-function "
                      "coordinates within 5 sigma of 0",
                      ok, instances, worst, coords_ok, coords)};
}

std::vector<double> per_run_traces(const CellSummary& cell) { return cell.variance_trace_values(); }

Outcome criterion4(const ExperimentSummary& s) {
  const auto g0 = per_run_traces(s.cell("ips+_gamma0_eta1"));
  const auto g1 = per_run_traces(s.cell("ips+_gamma1_eta1"));
  if (g0.size() != 15 || g1.size() != 15) return {false, "missing runs"};
  int lower = 0;
  std::vector<double> ratios;
  for (std::size_t i = 0; i < g0.size(); ++i) {
    lower += g0[i] < g1[i];
    ratios.push_back(g0[i] / g1[i]);
  }
  const double med = median(ratios);
  return {lower >= 13 && med <= 0.75,
          fmt::format("trace(gamma=0) < trace(gamma=1) in {}/15 seeds; median ratio {:.3f} (mean traces {:.1f} vs "
                      "{:.1f})",
                      lower, med, mean(g0), mean(g1))};
}

Outcome criterion5(const ExperimentSummary& s) {
  const auto ips = per_run_traces(s.cell("ips+_gamma0_eta1"));
  const auto naive = per_run_traces(s.cell("naive+_gamma0_eta1"));
  if (ips.size() != 15 || naive.size() != 15) return {false, "missing runs"};
  std::vector<double> ratios;
  for (std::size_t i = 0; i < ips.size(); ++i) ratios.push_back(ips[i] / naive[i]);
  const double med = median(ratios);
  return {med >= 3.0, fmt::format("median trace ratio ips+/naive+ = {:.2f}", med)};
}

Outcome criterion6(const ExperimentSummary& s) {
  const auto both = s.cell("ips+-_gamma0_eta1").final_offline_values();
  const auto pos = s.cell("ips+_gamma0_eta1").final_offline_values();
  const auto naive = s.cell("naive+_gamma0_eta1").final_offline_values();
  if (both.size() != 15 || pos.size() != 15 || naive.size() != 15) return {false, "missing runs"};
  const double mb = mean(both), mp = mean(pos), mn = mean(naive);
  const auto t = welch_t_test(both, naive);
  return {mb >= mp && mp >= mn && t.p_value < 0.05,
          fmt::format("nDCG@10 at 5k: ips+- {:.4f}, ips+ {:.4f}, naive+ {:.4f}; ips+- vs naive+ p={:.2e}", mb, mp,
                      mn, t.p_value)};
}

Outcome criterion7(const ExperimentSummary& s) {
  const auto ips = s.cell("ips+-_gamma0_eta1").final_offline_values();
  const auto sky = s.cell("skyline_gamma0").final_offline_values();
  if (ips.size() != 15 || sky.size() != 15) return {false, "missing runs"};
  const double diff = mean(ips) - mean(sky);
  const auto t = welch_t_test(ips, sky);
  return {std::abs(diff) <= 0.05 && t.p_value > 0.05,
          fmt::format("final nDCG@10 at 50k: ips+- {:.4f}, skyline {:.4f} (diff {:+.4f}); p={:.3f}", mean(ips),
                      mean(sky), diff, t.p_value)};
}

// Mean offline curve over the successful runs of a cell.
std::vector<std::pair<std::size_t, double>> mean_curve(const CellSummary& cell) {
  std::vector<std::pair<std::size_t, double>> curve;
  std::size_t n = 0;
  for (const auto& r : cell.runs) {
    if (r.error) continue;
    if (curve.empty()) {
      curve = r.log.offline_ndcg;
    } else {
      for (std::size_t i = 0; i < curve.size(); ++i) curve[i].second += r.log.offline_ndcg[i].second;
    }
    ++n;
  }
  for (auto& p : curve) p.second /= static_cast<double>(n);
  return curve;
}

std::optional<std::size_t> first_reach(const std::vector<std::pair<std::size_t, double>>& curve, double level) {
  for (const auto& [i, v] : curve)
    if (v >= level) return i;
  return std::nullopt;
}

Outcome criterion8(const ExperimentSummary& s) {
  const auto& c05 = s.cell("ips+-_gamma0_eta0.5");
  const auto& c1 = s.cell("ips+-_gamma0_eta1");
  const auto& c2 = s.cell("ips+-_gamma0_eta2");
  const auto v05 = c05.final_offline_values(), v1 = c1.final_offline_values(), v2 = c2.final_offline_values();
  if (v05.size() != 15 || v1.size() != 15 || v2.size() != 15) return {false, "missing runs"};
  const double m05 = mean(v05), m1 = mean(v1), m2 = mean(v2);
  const double p05 = welch_t_test(v2, v05).p_value, p1 = welch_t_test(v2, v1).p_value;
  const bool close = std::abs(m05 - m1) <= 0.03;
  const bool worse = m2 < m05 && m2 < m1 && p05 < 0.05 && p1 < 0.05;

  const auto k05 = mean_curve(c05), k1 = mean_curve(c1), k2 = mean_curve(c2);
  const double start = k1.front().second, top = std::min(m05, m1);
  int slower = 0;
  const int levels = 10;
  for (int i = 1; i <= levels; ++i) {
    const double level = start + (top - start) * i / levels;
    const auto r05 = first_reach(k05, level), r1 = first_reach(k1, level), r2 = first_reach(k2, level);
    const std::size_t fast = std::max(r05.value_or(SIZE_MAX), r1.value_or(SIZE_MAX));
    slower += !r2 || (fast != SIZE_MAX && *r2 > fast);
  }
  return {close && worse && slower == levels,
          fmt::format("final nDCG@10: eta 0.5 {:.4f}, eta 1 {:.4f} (gap {:.4f}), eta 2 {:.4f} (p={:.1e} / {:.1e}); "
                      "eta 2 slower at {}/{} thresholds",
                      m05, m1, std::abs(m05 - m1), m2, p05, p1, slower, levels)};
}

Outcome criterion9() {
  std::vector<std::string> failures;
  auto expect = [&](const char* what, double got, double want, double tol) {
    if (!(std::abs(got - want) <= tol)) failures.push_back(fmt::format("{}={} (want {})", what, got, want));
  };
  const std::vector<int> ideal{4, 3, 2, 1, 0}, zeros{0, 0, 0}, flip{0, 1};
  expect("ndcg ideal", ndcg_at_k(ideal, 10), 1.0, 0.0);
  expect("ndcg zeros", ndcg_at_k(zeros, 10), 0.0, 0.0);
  expect("ndcg [0,1]", ndcg_at_k(flip, 2), 0.630930, 1e-6);
  expect("online empty", online_performance({}, 0.9995), 0.0, 0.0);
  const std::vector<double> ones{1, 1, 1};
  expect("online [1,1,1]", online_performance(ones, 0.9995), 2.99850025, 1e-9);
  for (std::size_t n : {1u, 100u, 10000u, 100000u}) {
    const std::vector<double> xs(n, 0.8);
    expect("online closed form", online_performance(xs, 0.9995),
           0.8 * (1 - std::pow(0.9995, static_cast<double>(n))) / (1 - 0.9995), 1e-9);
  }
  expect("lambda(0)", dcg_weight(0), 1.0, 0.0);
  expect("lambda(1)", dcg_weight(1), 0.630930, 1e-6);
  auto r = [](RewardVariant v, std::size_t t, int c) {
    return step_reward(RewardSpec{v, 0.0, 1.0, std::nullopt}, t, c).value;
  };
  expect("ips+ t1 c1", r(RewardVariant::kIpsPos, 1, 1), 1.261860, 1e-6);
  expect("ips- t0 c1", r(RewardVariant::kIpsNeg, 0, 1), 0.0, 0.0);
  expect("ips- t1 c0", r(RewardVariant::kIpsNeg, 1, 0), -0.630930, 1e-6);
  expect("ips+- t1 c1", r(RewardVariant::kIpsBoth, 1, 1), 1.892790, 1e-6);
  expect("naive+ t1 c1", r(RewardVariant::kNaivePos, 1, 1), 0.630930, 1e-6);
  expect("naive- t1 c0", r(RewardVariant::kNaiveNeg, 1, 0), -0.630930, 1e-6);
  expect("dcg t0 y1", r(RewardVariant::kDcg, 0, 1), 1.0, 0.0);
  std::string detail = failures.empty() ? "all hand-derived examples reproduced" : "";
  for (const auto& f : failures) detail += f + "; ";
  return {failures.empty(), detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion10(const fs::path& root) {
  auto base = learning_config(root / "repro_a", "noisy", 2000);
  base.runs = 3;
  base.sweep.reward = {RewardVariant::kIpsBoth, RewardVariant::kNaivePos};
  base.sweep.skyline = true;
  auto again = base;
  again.out_dir = root / "repro_b";
  again.parallelism = 1;
  fs::remove_all(again.out_dir);
  // Third run of the sweep, re-executed on its own.
  auto single = base;
  single.out_dir = root / "repro_single";
  single.runs = 1;
  single.train.seed = 2;
  single.synthetic->seed = base.synthetic->seed + 2;
  fs::remove_all(single.out_dir);

  run_experiment(base);
  run_experiment(again);
  run_experiment(single);

  std::size_t files = 0, same = 0;
  for (const auto& e : fs::recursive_directory_iterator(base.out_dir / "runs")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), base.out_dir);
    ++files;
    same += slurp(e.path()) == slurp(again.out_dir / rel);
    if (rel.parent_path().filename() == "seed_2") {
      const auto iso = single.out_dir / "runs" / rel.parent_path().parent_path().filename() / "seed_2" /
                       rel.filename();
      ++files;
      same += slurp(e.path()) == slurp(iso);
    }
  }
  return {files > 0 && files == same, fmt::format("{}/{} CSV/JSON files byte-identical across re-executions", same, files)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string out = "acceptance-out";
  std::vector<int> only;
  app.add_option("--out", out, "Scratch directory for experiment outputs");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  const fs::path root(out);
  fs::create_directories(root);

  auto selected = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };
  int failed = 0;
  auto report = [&](int n, const char* title, const std::function<Outcome()>& check) {
    if (!selected(n)) return;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    fmt::print("{} criterion {:>2} {}: {} [{:.1f}s]\n", o.pass ? "PASS" : "FAIL", n, title, o.detail, secs);
    std::fflush(stdout);
  };

  report(1, "IPS+ unbiasedness", criterion1);
  report(2, "IPS- unbiasedness", criterion2);
  report(3, "gradient correctness", criterion3);

  std::optional<ExperimentSummary> variance;
  auto variance_study = [&]() -> const ExperimentSummary& {
    if (!variance) {
      auto c = learning_config(root / "variance", "noisy", 5000);
      c.sweep.reward = {RewardVariant::kIpsPos, RewardVariant::kNaivePos};
      c.sweep.gamma = {0.0, 0.5, 1.0};
      variance = run_experiment(c);
    }
    return *variance;
  };
  report(4, "variance ordering gamma=0 vs gamma=1", [&] { return criterion4(variance_study()); });
  report(5, "IPS variance inflation", [&] { return criterion5(variance_study()); });

  report(6, "reward-shaping ordering", [&] {
    auto c = learning_config(root / "shaping", "perfect", 5000);
    c.sweep.reward = {RewardVariant::kNaivePos, RewardVariant::kIpsPos, RewardVariant::kNaiveBoth,
                      RewardVariant::kIpsBoth};
    return criterion6(run_experiment(c));
  });
  report(7, "skyline parity", [&] {
    auto c = learning_config(root / "skyline", "perfect", 50000);
    c.train.eval_every = 5000;
    c.train.reward.variant = RewardVariant::kIpsBoth;
    c.sweep.skyline = true;
    return criterion7(run_experiment(c));
  });
  report(8, "propensity mismatch", [&] {
    auto c = learning_config(root / "mismatch", "noisy", 100000);
    c.train.eval_every = 500;
    c.train.reward.variant = RewardVariant::kIpsBoth;
    c.sweep.eta_model = {0.5, 1.0, 2.0};
    return criterion8(run_experiment(c));
  });
  report(9, "metric exactness", criterion9);
  report(10, "reproducibility", [&] { return criterion10(root); });

  fmt::print("{}\n", failed == 0 ? "ALL CRITERIA PASSED" : fmt::format("{} CRITERIA FAILED", failed));
  return failed == 0 ? 0 : 1;
}
