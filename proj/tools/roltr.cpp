// Command-line driver: train, sweep, eval and gen-data.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "roltr/data.hpp"
#include "roltr/harness.hpp"
#include "roltr/metrics.hpp"
#include "roltr/policy.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A LETOR dataset is a directory holding train.txt / test.txt (and
// optionally vali.txt), the usual fold layout of the public collections.
roltr::LetorSource letor_from_dir(const fs::path& dir, std::size_t feature_dim, bool normalize) {
  roltr::LetorSource src;
  src.train = dir / "train.txt";
  src.test = dir / "test.txt";
  if (fs::exists(dir / "vali.txt")) src.validation = dir / "vali.txt";
  src.feature_dim = feature_dim;
  src.normalize = normalize;
  return src;
}

struct Options {
  std::string config_path;
  std::string dataset;
  std::string synthetic;
  std::size_t feature_dim = 0;
  bool normalize = false;
  std::string clicks;
  std::vector<std::string> rewards;
  std::vector<double> gammas;
  std::vector<double> eta_models;
  bool skyline = false;
};

void add_common(CLI::App* cmd, Options& o, roltr::ExperimentConfig& c, bool sweep_axes) {
  cmd->add_option("--config", o.config_path, "JSON experiment config; flags override its fields");
  cmd->add_option("--dataset", o.dataset, "LETOR fold directory with train.txt/test.txt");
  cmd->add_option("--synthetic", o.synthetic, "Synthetic dataset spec (JSON)");
  cmd->add_option("--feature-dim", o.feature_dim, "LETOR feature count (0 infers)");
  cmd->add_flag("--normalize", o.normalize, "Per-query min-max feature normalisation");
  cmd->add_option("--clicks", o.clicks, "perfect|noisy|detbin");
  cmd->add_option("--eta-true", c.eta_true, "Simulated user's position-bias exponent");
  cmd->add_option("--eta-model", c.train.reward.eta_model, "Learner's assumed propensity exponent");
  cmd->add_option("--gamma", c.train.reward.gamma, "Reward discount factor");
  cmd->add_option("--lr", c.train.learning_rate, "Learning rate");
  cmd->add_option("--impressions", c.train.impressions, "Training impressions per run");
  cmd->add_option("--serp-size", c.train.serp_size, "Documents displayed per impression");
  cmd->add_option("--seed", c.train.seed, "Base seed; run i uses seed + i");
  cmd->add_option("--eval-every", c.train.eval_every, "Offline evaluation interval");
  cmd->add_option("--variance-window", c.train.variance_window, "Episodes per gradient-variance window");
  cmd->add_option("--out", c.out_dir, "Output directory");
  cmd->add_option("--tau", c.tau, "Online-performance discount");
  cmd->add_option("--smoothing", c.smoothing_window, "Moving-average window for curve files");
  cmd->add_option("--reward", o.rewards, "dcg|naive+|ips+|naive-|ips-|naive+-|ips+-")
      ->delimiter(',')
      ->expected(sweep_axes ? -1 : 1);
  if (sweep_axes) {
    cmd->add_option("--runs", c.runs, "Seeded repeats per cell");
    cmd->add_option("--parallelism", c.parallelism, "Concurrent training runs");
    cmd->add_option("--gammas", o.gammas, "Sweep over gamma (comma separated)")->delimiter(',');
    cmd->add_option("--eta-models", o.eta_models, "Sweep over eta_model (comma separated)")->delimiter(',');
    cmd->add_flag("--skyline", o.skyline, "Add full-information skyline cells");
  }
}

// Applies the config file first, then re-parses so explicit flags win.
roltr::ExperimentConfig resolve(CLI::App* cmd, const Options& o, roltr::ExperimentConfig flags) {
  roltr::ExperimentConfig c = flags;
  if (!o.config_path.empty()) {
    c = roltr::experiment_config_from_json(slurp(o.config_path));
    auto take = [&](const char* name, auto& dst, const auto& src) {
      if (cmd->count(name) > 0) dst = src;
    };
    take("--eta-true", c.eta_true, flags.eta_true);
    take("--eta-model", c.train.reward.eta_model, flags.train.reward.eta_model);
    take("--gamma", c.train.reward.gamma, flags.train.reward.gamma);
    take("--lr", c.train.learning_rate, flags.train.learning_rate);
    take("--impressions", c.train.impressions, flags.train.impressions);
    take("--serp-size", c.train.serp_size, flags.train.serp_size);
    take("--seed", c.train.seed, flags.train.seed);
    take("--eval-every", c.train.eval_every, flags.train.eval_every);
    take("--variance-window", c.train.variance_window, flags.train.variance_window);
    take("--out", c.out_dir, flags.out_dir);
    take("--tau", c.tau, flags.tau);
    take("--smoothing", c.smoothing_window, flags.smoothing_window);
    if (cmd->get_option_no_throw("--runs")) {
      take("--runs", c.runs, flags.runs);
      take("--parallelism", c.parallelism, flags.parallelism);
    }
  }
  if (!o.dataset.empty()) {
    c.letor = letor_from_dir(o.dataset, o.feature_dim, o.normalize);
    c.synthetic.reset();
  }
  if (!o.synthetic.empty()) {
    c.synthetic = roltr::synthetic_spec_from_json(slurp(o.synthetic));
    c.letor.reset();
  }
  if (!o.clicks.empty()) c.clicks = o.clicks;
  if (o.rewards.size() == 1) {
    c.train.reward.variant = roltr::parse_reward_variant(o.rewards.front());
  } else if (o.rewards.size() > 1) {
    c.sweep.reward.clear();
    for (const auto& r : o.rewards) c.sweep.reward.push_back(roltr::parse_reward_variant(r));
  }
  if (!o.gammas.empty()) c.sweep.gamma = o.gammas;
  if (!o.eta_models.empty()) c.sweep.eta_model = o.eta_models;
  if (o.skyline) c.sweep.skyline = true;
  return c;
}

void print_summary(const roltr::ExperimentSummary& summary) {
  for (const auto& cell : summary.cells) {
    std::size_t failed = 0;
    for (const auto& r : cell.runs) failed += r.error ? 1 : 0;
    fmt::print("{:<32} offline nDCG@10 {:.4f} ± {:.4f}  online {:.2f} ± {:.2f}  var-trace {:.4g}{}\n",
               cell.cell.name, cell.final_offline_ndcg.mean, cell.final_offline_ndcg.std,
               cell.online_performance.mean, cell.online_performance.std, cell.variance_trace.mean,
               failed ? fmt::format("  ({} failed)", failed) : std::string());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online learning to rank with policy gradient and IPS reward shaping"};
  app.require_subcommand(1);

  Options train_opts, sweep_opts;
  roltr::ExperimentConfig train_cfg, sweep_cfg;
  auto* train = app.add_subcommand("train", "Single training run");
  add_common(train, train_opts, train_cfg, false);
  auto* sweep = app.add_subcommand("sweep", "Seeded multi-run experiment over sweep axes");
  add_common(sweep, sweep_opts, sweep_cfg, true);

  std::string eval_checkpoint, eval_dataset, eval_split = "test";
  std::size_t eval_dim = 0, eval_k = 10;
  bool eval_normalize = false;
  auto* eval = app.add_subcommand("eval", "Offline nDCG of a policy checkpoint");
  eval->add_option("--checkpoint", eval_checkpoint, "Policy JSON")->required();
  eval->add_option("--dataset", eval_dataset, "LETOR file or fold directory")->required();
  eval->add_option("--split", eval_split, "File inside a fold directory: train|vali|test");
  eval->add_option("--feature-dim", eval_dim, "Feature count (0 uses the checkpoint's)");
  eval->add_option("-k", eval_k, "nDCG cutoff");
  eval->add_flag("--normalize", eval_normalize, "Per-query min-max feature normalisation");

  std::string gen_spec, gen_out = "synthetic";
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset in LETOR format");
  gen->add_option("--synthetic", gen_spec, "Synthetic dataset spec (JSON)")->required();
  gen->add_option("--out", gen_out, "Output directory");
  auto* seed_opt = gen->add_option("--seed", gen_seed, "Override the spec's seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train || *sweep) {
      const bool is_train = train->parsed();
      auto config = is_train ? resolve(train, train_opts, train_cfg) : resolve(sweep, sweep_opts, sweep_cfg);
      if (is_train) {
        config.runs = 1;
        config.sweep = {};
      }
      const auto summary = roltr::run_experiment(config);
      roltr::emit_plot_data(config.out_dir, config.smoothing_window);
      print_summary(summary);
      for (const auto& cell : summary.cells) {
        for (const auto& r : cell.runs) {
          if (r.error) return 2;
        }
      }
      return 0;
    }
    if (*eval) {
      const auto policy = roltr::load_policy(eval_checkpoint);
      fs::path file = eval_dataset;
      if (fs::is_directory(file)) file = file / (eval_split + ".txt");
      const std::size_t dim = eval_dim > 0 ? eval_dim : policy.dim();
      auto data = roltr::load_letor(file, dim, roltr::Split::kTest);
      if (eval_normalize) data = roltr::normalize_min_max(data);
      fmt::print("{}\n", roltr::offline_performance(policy, data, eval_k));
      return 0;
    }
    if (*gen) {
      auto spec = roltr::synthetic_spec_from_json(slurp(gen_spec));
      if (seed_opt->count() > 0) spec.seed = gen_seed;
      const auto data = roltr::generate_synthetic(spec);
      fs::create_directories(gen_out);
      const fs::path out = gen_out;
      roltr::write_letor(out / "train.txt", data.train);
      if (!data.validation.empty()) roltr::write_letor(out / "vali.txt", data.validation);
      roltr::write_letor(out / "test.txt", data.test);
      roltr::write_sidecar(out / "hidden.json", data);
      fmt::print(stderr, "wrote {} train / {} validation / {} test queries to {}\n", data.train.queries.size(),
                 data.validation.queries.size(), data.test.queries.size(), out.string());
      return 0;
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}
