#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "roltr/clicksim.hpp"
#include "roltr/data.hpp"
#include "roltr/harness.hpp"
#include "roltr/learner.hpp"
#include "roltr/metrics.hpp"
#include "roltr/policy.hpp"
#include "roltr/rewards.hpp"

namespace py = pybind11;
using namespace roltr;

namespace {

RewardSpec make_reward(const std::string& variant, double gamma, double eta_model) {
  RewardSpec spec{parse_reward_variant(variant), gamma, eta_model, std::nullopt};
  spec.validate();
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Policy-gradient online learning to rank with IPS reward shaping";

  py::class_<Document>(m, "Document")
      .def(py::init<>())
      .def_readwrite("features", &Document::features)
      .def_readwrite("relevance", &Document::relevance)
      .def_readwrite("doc_index", &Document::doc_index);

  py::class_<Query>(m, "Query")
      .def(py::init<>())
      .def_readwrite("query_id", &Query::query_id)
      .def_readwrite("candidates", &Query::candidates);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("queries", &Dataset::queries)
      .def_readwrite("feature_dim", &Dataset::feature_dim)
      .def("num_documents", &Dataset::num_documents)
      .def("__len__", [](const Dataset& d) { return d.queries.size(); });

  py::class_<SyntheticSpec>(m, "SyntheticSpec")
      .def(py::init<>())
      .def_readwrite("n_queries", &SyntheticSpec::n_queries)
      .def_readwrite("docs_per_query", &SyntheticSpec::docs_per_query)
      .def_readwrite("feature_dim", &SyntheticSpec::feature_dim)
      .def_readwrite("relevance_distribution", &SyntheticSpec::relevance_distribution)
      .def_readwrite("noise_scale", &SyntheticSpec::noise_scale)
      .def_readwrite("clutter_scale", &SyntheticSpec::clutter_scale)
      .def_readwrite("seed", &SyntheticSpec::seed)
      .def_readwrite("n_validation_queries", &SyntheticSpec::n_validation_queries)
      .def_readwrite("n_test_queries", &SyntheticSpec::n_test_queries);

  py::class_<SyntheticData>(m, "SyntheticData")
      .def_readonly("train", &SyntheticData::train)
      .def_readonly("validation", &SyntheticData::validation)
      .def_readonly("test", &SyntheticData::test)
      .def_readonly("hidden_weights", &SyntheticData::hidden_weights);

  m.def("generate_synthetic", &generate_synthetic, py::arg("spec"));
  m.def("load_letor", [](const std::filesystem::path& p, std::size_t dim) { return load_letor(p, dim); },
        py::arg("path"), py::arg("feature_dim"));
  m.def("write_letor", py::overload_cast<const std::filesystem::path&, const Dataset&>(&write_letor),
        py::arg("path"), py::arg("dataset"));

  py::class_<Policy>(m, "Policy")
      .def(py::init([](std::vector<double> w, double lr) { return Policy{std::move(w), lr}; }),
           py::arg("weights"), py::arg("learning_rate") = 0.01)
      .def_readonly("weights", &Policy::weights)
      .def_readonly("learning_rate", &Policy::learning_rate);

  m.def("score", py::overload_cast<const Policy&, const Document&>(&score));
  m.def("action_probabilities", [](const Policy& p, const std::vector<Document>& c) {
    return action_distribution(p, c).probabilities;
  });
  m.def("log_policy_gradient",
        [](const Policy& p, const std::vector<Document>& c, std::size_t chosen) {
          return log_policy_gradient(p, c, chosen);
        },
        py::arg("policy"), py::arg("candidates"), py::arg("chosen"));

  m.def("observation_probability",
        [](double eta, std::size_t rank) { return observation_probability(PropensityModel{eta}, rank); },
        py::arg("eta"), py::arg("rank"));

  m.def("dcg_weight", &dcg_weight, py::arg("t"));
  m.def("step_reward",
        [](const std::string& variant, std::size_t t, int signal, double eta_model) {
          return step_reward(make_reward(variant, 0.0, eta_model), t, signal).value;
        },
        py::arg("variant"), py::arg("t"), py::arg("signal"), py::arg("eta_model") = 1.0);
  m.def("episode_return",
        [](const std::vector<double>& values, double gamma, std::size_t t) {
          std::vector<StepReward> r;
          for (std::size_t i = 0; i < values.size(); ++i) r.push_back({i, values[i]});
          return episode_return(RewardSpec{RewardVariant::kDcg, gamma, 1.0, std::nullopt}, r, t);
        },
        py::arg("rewards"), py::arg("gamma"), py::arg("t") = 0);
  m.def("expected_return_oracle",
        [](const std::vector<int>& labels, const std::string& variant, double eta_true, double eta_model,
           std::size_t n_trials, std::uint64_t seed) {
          Rng rng(seed);
          const auto est = expected_return_oracle(labels, parse_reward_variant(variant), eta_true, eta_model,
                                                  n_trials, rng);
          return py::make_tuple(est.mean, est.std_error());
        },
        py::arg("labels"), py::arg("variant"), py::arg("eta_true"), py::arg("eta_model"), py::arg("n_trials"),
        py::arg("seed") = 0);

  m.def("ndcg_at_k", [](const std::vector<int>& grades, std::size_t k) { return ndcg_at_k(grades, k); },
        py::arg("ranking"), py::arg("k") = 10);
  m.def("online_performance", [](const std::vector<double>& xs, double tau) { return online_performance(xs, tau); },
        py::arg("ndcg"), py::arg("tau") = 0.9995);
  m.def("offline_performance",
        [](const Policy& p, const Dataset& d, std::size_t k) { return offline_performance(p, d, k); },
        py::arg("policy"), py::arg("test"), py::arg("k") = 10);
  m.def("welch_t_test",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          const auto r = welch_t_test(a, b);
          return py::make_tuple(r.t, r.p_value);
        },
        py::arg("a"), py::arg("b"));
  m.def("gradient_variance",
        [](const std::vector<std::vector<double>>& g) { return gradient_variance(g); }, py::arg("gradients"));

  py::class_<MetricsLog>(m, "MetricsLog")
      .def_readonly("online_ndcg", &MetricsLog::online_ndcg)
      .def_readonly("offline_ndcg", &MetricsLog::offline_ndcg)
      .def_readonly("variance_trace", &MetricsLog::variance_trace);

  m.def("train_online",
        [](const Dataset& train, const Dataset& test, const std::string& reward, double gamma, double eta_model,
           const std::string& clicks, double eta_true, std::size_t impressions, double lr, std::uint64_t seed,
           std::size_t eval_every, std::size_t serp_size) {
          TrainConfig c;
          c.reward = make_reward(reward, gamma, eta_model);
          c.impressions = impressions;
          c.learning_rate = lr;
          c.seed = seed;
          c.eval_every = eval_every;
          c.serp_size = serp_size;
          py::gil_scoped_release release;
          const ClickSimulator sim{PropensityModel{eta_true}, ClickBehavior::from_name(clicks)};
          auto res = c.reward.variant == RewardVariant::kDcg ? train_offline_skyline(c, train, test)
                                                             : train_online(c, train, test, sim);
          return std::make_pair(res.policy, res.log);
        },
        py::arg("train"), py::arg("test"), py::arg("reward") = "ips+-", py::arg("gamma") = 0.0,
        py::arg("eta_model") = 1.0, py::arg("clicks") = "perfect", py::arg("eta_true") = 1.0,
        py::arg("impressions") = 10000, py::arg("lr") = 0.01, py::arg("seed") = 0, py::arg("eval_every") = 1000,
        py::arg("serp_size") = 10);

  m.def("run_experiment",
        [](const std::string& config_json) {
          const auto config = experiment_config_from_json(config_json);
          py::gil_scoped_release release;
          return run_experiment(config).to_json();
        },
        py::arg("config_json"), "Runs an experiment from a JSON config; returns the summary JSON.");
  m.def("emit_plot_data", &emit_plot_data, py::arg("out_dir"), py::arg("smoothing_window") = 100);
}
