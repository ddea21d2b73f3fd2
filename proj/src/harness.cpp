#include "roltr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

namespace roltr {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  if (letor.has_value() == synthetic.has_value()) {
    throw std::invalid_argument("exactly one of a LETOR dataset or a synthetic spec is required");
  }
  if (synthetic) synthetic->validate();
  if (runs == 0) throw std::invalid_argument("runs must be >= 1");
  if (parallelism == 0) throw std::invalid_argument("parallelism must be >= 1");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (smoothing_window == 0) throw std::invalid_argument("smoothing window must be >= 1");
  if (!(eta_true >= 0.0)) throw std::invalid_argument("eta_true must be non-negative");
  ClickBehavior::from_name(clicks);
  train.validate();
  for (double g : sweep.gamma) RewardSpec{train.reward.variant, g, 1.0, std::nullopt}.validate();
  for (double e : sweep.eta_model) RewardSpec{train.reward.variant, 0.0, e, std::nullopt}.validate();
}

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string format_number(double x) { return fmt::format("{}", x); }

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  ExperimentConfig c;
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    LetorSource src;
    src.train = d.at("train").get<std::string>();
    src.test = d.at("test").get<std::string>();
    if (d.contains("validation")) src.validation = d.at("validation").get<std::string>();
    read_if(d, "feature_dim", src.feature_dim);
    read_if(d, "normalize", src.normalize);
    c.letor = src;
  }
  if (j.contains("synthetic")) c.synthetic = synthetic_spec_from_json(j.at("synthetic").dump());
  read_if(j, "per_run_data", c.per_run_data);
  read_if(j, "clicks", c.clicks);
  read_if(j, "eta_true", c.eta_true);
  if (j.contains("reward")) c.train.reward.variant = parse_reward_variant(j.at("reward").get<std::string>());
  read_if(j, "gamma", c.train.reward.gamma);
  read_if(j, "eta_model", c.train.reward.eta_model);
  if (j.contains("max_ips_weight")) c.train.reward.max_ips_weight = j.at("max_ips_weight").get<double>();
  read_if(j, "lr", c.train.learning_rate);
  read_if(j, "impressions", c.train.impressions);
  read_if(j, "serp_size", c.train.serp_size);
  read_if(j, "seed", c.train.seed);
  read_if(j, "eval_every", c.train.eval_every);
  read_if(j, "variance_window", c.train.variance_window);
  read_if(j, "runs", c.runs);
  read_if(j, "parallelism", c.parallelism);
  read_if(j, "tau", c.tau);
  read_if(j, "smoothing_window", c.smoothing_window);
  if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    read_if(s, "gamma", c.sweep.gamma);
    read_if(s, "eta_model", c.sweep.eta_model);
    read_if(s, "skyline", c.sweep.skyline);
    if (s.contains("reward")) {
      for (const auto& name : s.at("reward")) c.sweep.reward.push_back(parse_reward_variant(name.get<std::string>()));
    }
    if (s.contains("gamma") && c.sweep.gamma.empty()) throw std::invalid_argument("sweep.gamma is empty");
    if (s.contains("eta_model") && c.sweep.eta_model.empty()) throw std::invalid_argument("sweep.eta_model is empty");
    if (s.contains("reward") && c.sweep.reward.empty()) throw std::invalid_argument("sweep.reward is empty");
  }
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  if (c.letor) {
    json d;
    d["train"] = c.letor->train.string();
    d["test"] = c.letor->test.string();
    if (c.letor->validation) d["validation"] = c.letor->validation->string();
    d["feature_dim"] = c.letor->feature_dim;
    d["normalize"] = c.letor->normalize;
    j["dataset"] = d;
  }
  if (c.synthetic) j["synthetic"] = json::parse(synthetic_spec_to_json(*c.synthetic));
  j["per_run_data"] = c.per_run_data;
  j["clicks"] = c.clicks;
  j["eta_true"] = c.eta_true;
  j["reward"] = std::string(to_string(c.train.reward.variant));
  j["gamma"] = c.train.reward.gamma;
  j["eta_model"] = c.train.reward.eta_model;
  if (c.train.reward.max_ips_weight) j["max_ips_weight"] = *c.train.reward.max_ips_weight;
  j["lr"] = c.train.learning_rate;
  j["impressions"] = c.train.impressions;
  j["serp_size"] = c.train.serp_size;
  j["seed"] = c.train.seed;
  j["eval_every"] = c.train.eval_every;
  j["variance_window"] = c.train.variance_window;
  j["runs"] = c.runs;
  j["parallelism"] = c.parallelism;
  j["tau"] = c.tau;
  j["smoothing_window"] = c.smoothing_window;
  j["out"] = c.out_dir.string();
  json s = json::object();
  if (!c.sweep.gamma.empty()) s["gamma"] = c.sweep.gamma;
  if (!c.sweep.eta_model.empty()) s["eta_model"] = c.sweep.eta_model;
  s["skyline"] = c.sweep.skyline;
  for (auto v : c.sweep.reward) s["reward"].push_back(std::string(to_string(v)));
  j["sweep"] = s;
  return j.dump(2);
}

std::vector<Cell> expand_cells(const ExperimentConfig& config) {
  const auto& base = config.train.reward;
  const auto gammas = config.sweep.gamma.empty() ? std::vector<double>{base.gamma} : config.sweep.gamma;
  const auto rewards = config.sweep.reward.empty() ? std::vector<RewardVariant>{base.variant} : config.sweep.reward;
  const auto etas = config.sweep.eta_model.empty() ? std::vector<double>{base.eta_model} : config.sweep.eta_model;

  std::vector<Cell> cells;
  for (auto variant : rewards) {
    for (double gamma : gammas) {
      for (double eta : etas) {
        RewardSpec spec = base;
        spec.variant = variant;
        spec.gamma = gamma;
        spec.eta_model = eta;
        const bool skyline = variant == RewardVariant::kDcg;
        cells.push_back({fmt::format("{}_gamma{}_eta{}", to_string(variant), format_number(gamma),
                                     format_number(eta)),
                         spec, skyline});
      }
    }
  }
  if (config.sweep.skyline) {
    for (double gamma : gammas) {
      RewardSpec spec = base;
      spec.variant = RewardVariant::kDcg;
      spec.gamma = gamma;
      cells.push_back({fmt::format("skyline_gamma{}", format_number(gamma)), spec, true});
    }
  }
  return cells;
}

RunData load_run_data(const ExperimentConfig& config, std::size_t run_index) {
  if (config.synthetic) {
    SyntheticSpec spec = *config.synthetic;
    if (config.per_run_data) spec.seed += run_index;
    auto data = generate_synthetic(spec);
    return {std::move(data.train), std::move(data.test)};
  }
  const auto& src = *config.letor;
  const std::size_t dim = src.feature_dim > 0 ? src.feature_dim : infer_feature_dim(src.train);
  RunData rd{load_letor(src.train, dim, Split::kTrain), load_letor(src.test, dim, Split::kTest)};
  rd.train.validate();
  rd.test.validate();
  if (src.normalize) {
    rd.train = normalize_min_max(rd.train);
    rd.test = normalize_min_max(rd.test);
  }
  return rd;
}

std::vector<double> CellSummary::final_offline_values() const {
  std::vector<double> v;
  for (const auto& r : runs) if (!r.error) v.push_back(r.final_offline_ndcg);
  return v;
}

std::vector<double> CellSummary::online_performance_values() const {
  std::vector<double> v;
  for (const auto& r : runs) if (!r.error) v.push_back(r.online_performance);
  return v;
}

std::vector<double> CellSummary::variance_trace_values() const {
  std::vector<double> v;
  for (const auto& r : runs) if (!r.error) v.push_back(r.mean_variance_trace);
  return v;
}

const CellSummary& ExperimentSummary::cell(const std::string& name) const {
  for (const auto& c : cells) if (c.cell.name == name) return c;
  throw std::out_of_range("no cell named '" + name + "'");
}

namespace {

json aggregate_json(const Aggregate& a) { return json{{"mean", a.mean}, {"std", a.std}, {"n", a.n}}; }

Aggregate aggregate(const std::vector<double>& xs) { return {mean(xs), sample_std(xs), xs.size()}; }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

fs::path run_dir(const fs::path& out_dir, const Cell& cell, std::uint64_t seed) {
  return out_dir / "runs" / cell.name / fmt::format("seed_{}", seed);
}

}  // namespace

std::string ExperimentSummary::to_json() const {
  json j;
  j["cells"] = json::array();
  for (const auto& c : cells) {
    json cj;
    cj["name"] = c.cell.name;
    cj["reward"] = std::string(to_string(c.cell.reward.variant));
    cj["gamma"] = c.cell.reward.gamma;
    cj["eta_model"] = c.cell.reward.eta_model;
    cj["skyline"] = c.cell.skyline;
    cj["final_offline_ndcg"] = aggregate_json(c.final_offline_ndcg);
    cj["online_performance"] = aggregate_json(c.online_performance);
    cj["variance_trace"] = aggregate_json(c.variance_trace);
    cj["runs"] = json::array();
    for (const auto& r : c.runs) {
      json rj{{"seed", r.seed}, {"run_index", r.run_index}};
      if (r.error) {
        rj["error"] = *r.error;
      } else {
        rj["final_offline_ndcg"] = r.final_offline_ndcg;
        rj["online_performance"] = r.online_performance;
        rj["mean_variance_trace"] = r.mean_variance_trace;
        json traces = json::array();
        for (const auto& [w, v] : r.log.variance_trace) traces.push_back(v);
        rj["variance_traces"] = traces;
      }
      cj["runs"].push_back(rj);
    }
    j["cells"].push_back(cj);
  }
  j["welch_tests"] = json::array();
  for (const auto& t : tests) {
    j["welch_tests"].push_back({{"a", t.cell_a}, {"b", t.cell_b}, {"metric", t.metric},
                                {"t", t.result.t}, {"df", t.result.df}, {"p", t.result.p_value}});
  }
  return j.dump(2);
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto cells = expand_cells(config);
  const ClickSimulator simulator{PropensityModel{config.eta_true}, ClickBehavior::from_name(config.clicks)};

  // Datasets are immutable once built and shared read-only by the workers.
  std::vector<std::shared_ptr<const RunData>> data(config.runs);
  const bool shared_data = config.letor.has_value() || !config.per_run_data;
  for (std::size_t r = 0; r < config.runs; ++r) {
    if (shared_data && r > 0) {
      data[r] = data[0];
    } else {
      data[r] = std::make_shared<const RunData>(load_run_data(config, r));
    }
  }

  ExperimentSummary summary;
  summary.cells.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    summary.cells[c].cell = cells[c];
    summary.cells[c].runs.resize(config.runs);
  }

  const std::size_t n_tasks = cells.size() * config.runs;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < n_tasks; task = next++) {
      const auto& cell = cells[task / config.runs];
      const std::size_t r = task % config.runs;
      RunOutcome& outcome = summary.cells[task / config.runs].runs[r];
      outcome.run_index = r;
      outcome.seed = config.train.seed + r;
      try {
        TrainConfig tc = config.train;
        tc.reward = cell.reward;
        tc.seed = outcome.seed;
        const auto dir = run_dir(config.out_dir, cell, outcome.seed);
        fs::create_directories(dir);
        TrainResult res = cell.skyline ? train_offline_skyline(tc, data[r]->train, data[r]->test)
                                       : train_online(tc, data[r]->train, data[r]->test, simulator);
        outcome.log = std::move(res.log);
        outcome.final_offline_ndcg = outcome.log.offline_ndcg.back().second;
        outcome.online_performance = online_performance(outcome.log.online_ndcg, config.tau);
        std::vector<double> traces;
        for (const auto& [w, v] : outcome.log.variance_trace) traces.push_back(v);
        outcome.mean_variance_trace = mean(traces);

        std::ostringstream online, offline, variance;
        write_online_csv(online, outcome.log);
        write_offline_csv(offline, outcome.log);
        write_variance_csv(variance, outcome.log);
        write_file(dir / "online.csv", online.str());
        write_file(dir / "offline.csv", offline.str());
        write_file(dir / "variance.csv", variance.str());
        write_file(dir / "policy.json", policy_to_json(res.policy) + "\n");
      } catch (const std::exception& e) {
        outcome.error = e.what();
        outcome.log = {};
        try {
          const auto dir = run_dir(config.out_dir, cell, outcome.seed);
          fs::create_directories(dir);
          write_file(dir / "error.txt", std::string(e.what()) + "\n");
        } catch (const std::exception&) {
        }
        fmt::print(stderr, "run {} seed {} failed: {}\n", cell.name, outcome.seed, e.what());
      }
    }
  };

  const std::size_t n_threads = std::min(config.parallelism, n_tasks);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  for (auto& cs : summary.cells) {
    cs.final_offline_ndcg = aggregate(cs.final_offline_values());
    cs.online_performance = aggregate(cs.online_performance_values());
    cs.variance_trace = aggregate(cs.variance_trace_values());
  }
  for (std::size_t a = 0; a < summary.cells.size(); ++a) {
    for (std::size_t b = a + 1; b < summary.cells.size(); ++b) {
      const auto& ca = summary.cells[a];
      const auto& cb = summary.cells[b];
      auto add = [&](const char* metric, const std::vector<double>& xa, const std::vector<double>& xb) {
        if (xa.size() >= 2 && xb.size() >= 2) {
          summary.tests.push_back({ca.cell.name, cb.cell.name, metric, welch_t_test(xa, xb)});
        }
      };
      add("final_offline_ndcg", ca.final_offline_values(), cb.final_offline_values());
      add("online_performance", ca.online_performance_values(), cb.online_performance_values());
    }
  }

  fs::create_directories(config.out_dir);
  write_file(config.out_dir / "summary.json", summary.to_json() + "\n");
  write_file(config.out_dir / "config.json", experiment_config_to_json(config) + "\n");
  return summary;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  if (window == 0) throw std::invalid_argument("smoothing window must be >= 1");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    const std::size_t n = std::min(window, i + 1);
    out[i] = window == 1 ? values[i] : sum / static_cast<double>(n);
  }
  return out;
}

namespace {

struct Series {
  std::vector<std::size_t> x;
  std::vector<double> y;
};

Series read_series(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing run output " + path.string());
  Series s;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed row in " + path.string());
    s.x.push_back(std::stoull(line.substr(0, comma)));
    s.y.push_back(std::stod(line.substr(comma + 1)));
  }
  return s;
}

std::vector<fs::path> sorted_dirs(const fs::path& parent) {
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(parent)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace

std::vector<fs::path> emit_plot_data(const fs::path& out_dir, std::size_t smoothing_window) {
  const fs::path runs = out_dir / "runs";
  if (!fs::is_directory(runs)) throw std::runtime_error("no run outputs under " + runs.string());

  struct Family {
    const char* file;
    const char* metric;
    const char* out_name;
  };
  const Family families[] = {{"online.csv", "online_ndcg", "curves_online.csv"},
                             {"offline.csv", "offline_ndcg", "curves_offline.csv"},
                             {"variance.csv", "variance_trace", "curves_variance.csv"}};

  std::vector<fs::path> written;
  std::size_t n_runs = 0;
  for (const auto& fam : families) {
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "cell,seed,impression,metric,value\n");
    n_runs = 0;
    for (const auto& cell_dir : sorted_dirs(runs)) {
      for (const auto& seed_dir : sorted_dirs(cell_dir)) {
        const std::string seed_name = seed_dir.filename().string();
        if (!seed_name.starts_with("seed_") || fs::exists(seed_dir / "error.txt")) continue;
        const std::string cell = cell_dir.filename().string();
        const std::string seed = seed_name.substr(5);
        const Series s = read_series(seed_dir / fam.file);
        const auto smooth = moving_average(s.y, smoothing_window);
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          fmt::format_to(std::back_inserter(buf), "{},{},{},{},{}\n", cell, seed, s.x[i], fam.metric, s.y[i]);
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          fmt::format_to(std::back_inserter(buf), "{},{},{},{}_smoothed,{}\n", cell, seed, s.x[i], fam.metric,
                         smooth[i]);
        }
        ++n_runs;
      }
    }
    if (n_runs == 0) throw std::runtime_error("no completed runs under " + runs.string());
    const fs::path path = out_dir / fam.out_name;
    write_file(path, std::string(buf.data(), buf.size()));
    written.push_back(path);
  }
  return written;
}

}  // namespace roltr
