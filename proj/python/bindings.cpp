#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rewardlab/agents.hpp"
#include "rewardlab/harness.hpp"
#include "rewardlab/noise.hpp"
#include "rewardlab/tabular.hpp"
#include "rewardlab/variance.hpp"

namespace py = pybind11;
using namespace rewardlab;

namespace {

py::dict checkpoint_dict(const CheckpointRecord& c) {
  py::dict d;
  d["update"] = c.update;
  d["episodes"] = c.episodes;
  d["mean_return"] = c.mean_return;
  d["window_full"] = c.window_full;
  d["mean_abs_advantage"] = c.mean_abs_advantage;
  d["mean_sq_advantage"] = c.mean_sq_advantage;
  d["reward_loss"] = c.reward_loss;
  d["warmup_weight"] = c.warmup_weight;
  d["diverged"] = c.diverged;
  return d;
}

// Keyword overrides use the same names as the suite file's train.* keys.
TrainConfig train_config(const std::string& env, const std::string& algo, const std::string& noise,
                         const std::string& source, std::uint64_t seed, const py::dict& overrides) {
  TrainConfig c = default_train_config(env, parse_algorithm(algo));
  c.noise = parse_noise(noise);
  c.source = parse_reward_source(source);
  c.seed = seed;
  for (const auto& [k, v] : overrides) {
    const auto key = k.cast<std::string>();
    if (key == "updates") c.updates = v.cast<int>();
    else if (key == "num_envs") c.num_envs = v.cast<int>();
    else if (key == "rollout") c.rollout_length = v.cast<int>();
    else if (key == "gamma") c.advantage.gamma = v.cast<double>();
    else if (key == "lambda_") c.advantage.lambda = v.cast<double>();
    else if (key == "clip") c.advantage.clip_epsilon = v.cast<double>();
    else if (key == "policy_lr") c.policy_lr = v.cast<double>();
    else if (key == "critic_lr") c.critic_lr = v.cast<double>();
    else if (key == "reward_lr") c.reward_lr = v.cast<double>();
    else if (key == "epochs") c.epochs = v.cast<int>();
    else if (key == "minibatches") c.minibatches = v.cast<int>();
    else if (key == "window") c.trailing_window = v.cast<int>();
    else if (key == "hidden") c.hidden = v.cast<std::vector<int>>();
    else throw std::invalid_argument("unknown training option: " + key);
  }
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reward-noise lab: noise channels, tabular TD, variance checks, actor-critic training";

  py::register_exception<SuiteError>(m, "SuiteError", PyExc_RuntimeError);

  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init(&parse_noise), py::arg("spec") = "none")
      .def_readonly("sigma", &NoiseModel::sigma)
      .def_readonly("epsilon", &NoiseModel::epsilon)
      .def_property_readonly("level", &NoiseModel::level)
      .def_property_readonly("is_identity", &NoiseModel::is_identity)
      .def("label", &NoiseModel::label)
      .def("expected", [](const NoiseModel& n, double mean) { return expected_corrupted(n, mean); })
      .def("variance", [](const NoiseModel& n, double mean, double var) { return corrupted_variance(n, mean, var); })
      .def("sample", [](const NoiseModel& n, double reward, std::uint64_t seed, int count) {
        Rng rng = make_rng(seed);
        std::vector<double> out(static_cast<std::size_t>(count));
        for (auto& x : out) x = corrupt(n, reward, rng);
        return out;
      }, py::arg("reward"), py::arg("seed"), py::arg("count") = 1)
      .def("__repr__", [](const NoiseModel& n) { return "NoiseModel('" + n.label() + "')"; });

  m.def("chain_true_values", [](int steps, double reward, double prob, double gamma) {
    return true_values(build_chain(steps, reward, prob, gamma));
  }, py::arg("steps"), py::arg("reward"), py::arg("prob") = 0.5, py::arg("gamma") = 1.0);

  m.def("tabular_experiment",
        [](const std::string& preset, double reward, double prob, const std::string& noise,
           std::vector<double> alphas, int seeds, int episodes) {
          TabularConfig t;
          t.preset = preset;
          t.reward_value = reward;
          t.reward_prob = prob;
          t.noise = parse_noise(noise);
          t.alphas = std::move(alphas);
          t.episodes = episodes;
          t.seeds.clear();
          for (int s = 0; s < seeds; ++s) t.seeds.push_back(static_cast<std::uint64_t>(s));
          std::vector<TabularRecord> records;
          {
            py::gil_scoped_release release;
            records = run_tabular_experiment(t);
          }
          py::list out;
          for (const auto& r : records) {
            py::dict d;
            d["alpha"] = r.alpha;
            d["source"] = source_name(r.source);
            d["seed"] = r.seed;
            d["mean_rmse"] = r.mean_rmse;
            d["fallback_events"] = r.fallback_events;
            out.append(d);
          }
          return out;
        },
        py::arg("preset") = "chain5", py::arg("reward") = 1.0, py::arg("prob") = 0.5, py::arg("noise") = "none",
        py::arg("alphas") = default_alpha_grid(), py::arg("seeds") = 10, py::arg("episodes") = 100);

  m.def("sample_mean_variance_ratio",
        [](const std::string& law, double a, double b, int n, std::size_t trials, std::uint64_t seed) {
          const RewardLaw l = law == "bernoulli" ? RewardLaw::bernoulli(a, b) : RewardLaw::gaussian(a, b);
          Rng rng = make_rng(seed);
          return verify_sample_mean_variance(l, n, trials, rng).ratio;
        },
        py::arg("law"), py::arg("a"), py::arg("b"), py::arg("n"), py::arg("trials"), py::arg("seed") = 0);

  m.def("predicted_variance_gap", &predicted_variance_gap, py::arg("var_reward"), py::arg("cov_reward_value"),
        py::arg("n"));

  m.def("variance_gap",
        [](double p, double value, double coupling, double value_noise, int n, std::size_t trials, std::uint64_t seed) {
          Rng rng = make_rng(seed);
          const CoupledLaw law{RewardLaw::bernoulli(p, value), coupling, value_noise};
          const auto e = run_gap_experiment(law, n, trials, 50, rng);
          py::dict d;
          d["measured"] = e.report.measured_gap;
          d["analytic"] = e.analytic_gap;
          d["standard_error"] = e.report.standard_error;
          d["covariance_condition"] = e.report.covariance_condition;
          d["estimator_no_worse"] = e.report.estimator_no_worse;
          return d;
        },
        py::arg("p"), py::arg("value"), py::arg("coupling"), py::arg("value_noise"), py::arg("n"), py::arg("trials"),
        py::arg("seed") = 0);

  m.def("train",
        [](const std::string& env, const std::string& algo, const std::string& noise, const std::string& source,
           std::uint64_t seed, const py::kwargs& options) {
          const TrainConfig c = train_config(env, algo, noise, source, seed, options);
          TrainResult r;
          {
            py::gil_scoped_release release;
            r = train_agent(c);
          }
          py::list curve;
          for (const auto& rec : r.curve) curve.append(checkpoint_dict(rec));
          return curve;
        },
        py::arg("env") = "pointmass", py::arg("algo") = "clipped", py::arg("noise") = "none",
        py::arg("source") = "sampled", py::arg("seed") = 0,
        "Train one agent; returns the per-update checkpoint records.");

  m.def("normalized_improvement", &normalized_improvement, py::arg("ours"), py::arg("best_baseline"),
        py::arg("random_policy"));
  m.def("random_policy_baseline",
        [](const std::string& env, int episodes, std::uint64_t seed) {
          return random_policy_baseline(env, EnvOptions{}, episodes, seed);
        },
        py::arg("env"), py::arg("episodes") = 100, py::arg("seed") = 0);

  m.def("config_hash", [](const std::string& text) { return parse_suite_config(text).hash(); });
  m.def("run_suite",
        [](const std::filesystem::path& path) {
          SuiteOutcome out;
          {
            py::gil_scoped_release release;
            out = run_suite(path);
          }
          return out.exit_code;
        },
        py::arg("config_path"), "Run a suite file; writes its CSVs and returns the exit code.");
}
