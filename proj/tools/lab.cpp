// lab: command-line driver for the reward-estimation experiments.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rewardlab/agents.hpp"
#include "rewardlab/csv.hpp"
#include "rewardlab/harness.hpp"
#include "rewardlab/parallel.hpp"
#include "rewardlab/serialize.hpp"
#include "rewardlab/tabular.hpp"
#include "rewardlab/variance.hpp"

using namespace rewardlab;

namespace {

std::vector<std::uint64_t> seed_range(int n) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  return seeds;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_text_file(path, text);
}

KeyMode parse_key_mode(const std::string& s) {
  if (s == "s") return KeyMode::S;
  if (s == "sa") return KeyMode::SA;
  if (s == "sas") return KeyMode::SAS;
  throw std::invalid_argument("key mode must be s, sa or sas");
}

struct TabularArgs {
  std::string preset = "chain5";
  double reward = 1.0;
  double prob = 0.5;
  double gamma = 1.0;
  std::string noise = "none";
  std::vector<double> alphas = default_alpha_grid();
  int seeds = 10;
  int episodes = 100;
  std::string key_mode = "s";
  int workers = 1;
  std::string out;
};

int run_tabular(const TabularArgs& a) {
  if (!is_known_preset(a.preset) || a.preset.rfind("chain", 0) != 0)
    throw SuiteError(SuiteErrorCode::UnknownPreset, "tabular needs a chain preset, got " + a.preset);
  TabularConfig cfg;
  cfg.preset = a.preset;
  cfg.reward_value = a.reward;
  cfg.reward_prob = a.prob;
  cfg.gamma = a.gamma;
  cfg.noise = parse_noise(a.noise);
  cfg.alphas = a.alphas;
  cfg.episodes = a.episodes;
  cfg.seeds = seed_range(a.seeds);
  cfg.key_mode = parse_key_mode(a.key_mode);
  cfg.workers = a.workers;
  std::string csv = tabular_csv_header() + '\n';
  for (const auto& r : run_tabular_experiment(cfg)) csv += to_csv_row(r) + '\n';
  emit(a.out, csv);
  return kExitOk;
}

struct VarianceArgs {
  std::string check = "mean";
  double trials = 1e6;
  std::uint64_t seed = 0;
  std::string out;
};

std::string variance_sample_mean(std::size_t trials, std::uint64_t seed) {
  std::string csv = "law,n,ratio,expected,relative_error\n";
  const std::vector<std::pair<std::string, RewardLaw>> laws = {
      {"bernoulli(0.5)*5", RewardLaw::bernoulli(0.5, 5.0)}, {"normal(0,1)", RewardLaw::gaussian(0.0, 1.0)}};
  std::uint64_t stream = 0;
  for (const auto& [name, law] : laws)
    for (int n : {1, 10, 100}) {
      Rng rng = make_rng(seed, stream++);
      const auto c = verify_sample_mean_variance(law, n, trials, rng);
      csv += name + ',' + std::to_string(n) + ',' + format_double(c.ratio) + ',' + format_double(c.expected) + ',' +
             format_double(c.relative_error()) + '\n';
    }
  return csv;
}

std::vector<std::pair<std::string, CoupledLaw>> coupled_laws() {
  const auto r = RewardLaw::bernoulli(0.5, 5.0);
  return {{"cov>0", {r, 0.5, 1.0}}, {"cov=0", {r, 0.0, 1.0}}, {"cov<0", {r, -1.0, 1.0}}};
}

std::string variance_cov_scaling(std::size_t trials, std::uint64_t seed) {
  std::string csv = "law,n,cov_single,cov_mean,ratio,expected\n";
  std::uint64_t stream = 0;
  for (const auto& [name, law] : coupled_laws()) {
    if (law.coupling == 0.0) continue;
    for (int n : {1, 10, 100}) {
      Rng rng = make_rng(seed, stream++);
      const auto c = verify_cov_scaling(law, n, trials, rng);
      csv += name + ',' + std::to_string(n) + ',' + format_double(c.cov_single) + ',' + format_double(c.cov_mean) +
             ',' + format_double(c.ratio()) + ',' + format_double(c.expected()) + '\n';
    }
  }
  return csv;
}

std::string variance_gap_check(std::size_t trials, std::uint64_t seed) {
  std::string csv =
      "law,n,var_reward,cov_reward_value,measured_gap,predicted_gap,analytic_gap,standard_error,identity_holds,"
      "covariance_condition,estimator_no_worse\n";
  std::uint64_t stream = 0;
  for (const auto& [name, law] : coupled_laws()) {
    Rng rng = make_rng(seed, stream++);
    const int n = 10;
    const auto e = run_gap_experiment(law, n, trials, 100, rng);
    const auto& g = e.report;
    csv += name + ',' + std::to_string(n) + ',' + format_double(e.sampled.var_reward) + ',' +
           format_double(e.sampled.cov_reward_value) + ',' + format_double(g.measured_gap) + ',' +
           format_double(g.predicted_gap) + ',' + format_double(e.analytic_gap) + ',' +
           format_double(g.standard_error) + ',' + (g.identity_holds ? "1" : "0") + ',' +
           (g.covariance_condition ? "1" : "0") + ',' + (g.estimator_no_worse ? "1" : "0") + '\n';
  }
  return csv;
}

// Reward statistics on chain5 (+5, p = 0.5) with a converged tabular estimator.
std::string variance_tables(std::uint64_t seed) {
  std::string csv = "noise,var_true,var_corrupted,var_estimated,mse_corrupted,mse_estimated,transitions\n";
  EnvOptions options;
  options.chain_reward = 5.0;
  const auto env = make_environment("chain5", options);
  const ActionSampler policy = [](const Vec&, Rng&) { return Vec{0.0}; };
  const std::vector<NoiseModel> grid = {NoiseModel::identity(),   NoiseModel::gaussian(0.2), NoiseModel::gaussian(0.4),
                                        NoiseModel::uniform(0.1), NoiseModel::uniform(0.3),  NoiseModel::sparse(0.5),
                                        NoiseModel::sparse(0.9)};
  for (const auto& noise : grid) {
    SampleMeanEstimator est(KeyMode::S);
    NoisyEnvironment fit(env->clone(), noise, seed + 7, 0);
    Rng rng = make_rng(seed + 5, 0);
    for (int ep = 0; ep < 2000; ++ep) {
      fit.reset(rng);
      while (!fit.done()) est.observe(fit.step(Vec{0.0}, rng));
    }
    const auto per_trial = measure_reward_statistics(*env, noise, policy, est, 100, 10, seed);
    const auto s = average(per_trial);
    csv += noise.label() + ',' + format_double(s.var_true) + ',' + format_double(s.var_corrupted) + ',' +
           format_double(s.var_estimated) + ',' + format_double(s.mse_corrupted) + ',' +
           format_double(s.mse_estimated) + ',' + std::to_string(s.transitions) + '\n';
  }
  return csv;
}

int run_variance(const VarianceArgs& a) {
  if (!(a.trials >= 2.0)) throw std::invalid_argument("--trials must be at least 2");
  const auto trials = static_cast<std::size_t>(a.trials);
  std::string csv;
  if (a.check == "mean")
    csv = variance_sample_mean(trials, a.seed);
  else if (a.check == "cov")
    csv = variance_cov_scaling(trials, a.seed);
  else if (a.check == "gap")
    csv = variance_gap_check(trials, a.seed);
  else if (a.check == "tables")
    csv = variance_tables(a.seed);
  else
    throw std::invalid_argument("unknown check: " + a.check);
  emit(a.out, csv);
  return kExitOk;
}

struct TrainArgs {
  std::string env = "pointmass";
  std::string noise = "none";
  std::string algo = "clipped";
  std::string source = "sampled";
  int seeds = 1;
  int updates = -1;
  int workers = 1;
  std::string save_dir;
  std::string out;
};

int run_train(const TrainArgs& a) {
  if (!is_known_preset(a.env)) throw SuiteError(SuiteErrorCode::UnknownPreset, "unknown environment preset: " + a.env);
  TrainConfig base = default_train_config(a.env, parse_algorithm(a.algo));
  base.noise = parse_noise(a.noise);
  base.source = parse_reward_source(a.source);
  if (a.updates > 0) base.updates = a.updates;
  base.validate();

  const auto seeds = seed_range(a.seeds);
  std::vector<TrainResult> results(seeds.size());
  parallel_for(seeds.size(), a.workers, [&](std::size_t i) {
    TrainConfig cfg = base;
    cfg.seed = seeds[i];
    results[i] = train_agent(cfg);
  });

  std::string csv = run_record_csv_header() + '\n';
  int diverged = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (const auto& c : results[i].curve)
      csv += to_csv_row(RunRecord{"train", "", a.env, algorithm_name(base.algo), base.noise.label(),
                                  base.source.label(), seeds[i], c}) +
             '\n';
    if (results[i].diverged) ++diverged;
    if (!a.save_dir.empty()) {
      std::filesystem::create_directories(a.save_dir);
      const std::string stem = a.save_dir + "/seed" + std::to_string(seeds[i]);
      save_parameters(stem + "_policy.nrlb", {results[i].policy.net().layer_sizes(), results[i].policy.parameters()});
      save_parameters(stem + "_critic.nrlb", {results[i].critic.layer_sizes(), results[i].critic.parameters()});
      if (results[i].reward_model)
        save_parameters(stem + "_reward.nrlb",
                        {results[i].reward_model->net().layer_sizes(), results[i].reward_model->net().parameters()});
    }
  }
  emit(a.out, csv);
  return diverged == static_cast<int>(seeds.size()) ? kExitDivergence : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-estimation laboratory"};
  app.require_subcommand(1);

  TabularArgs tab;
  auto* tabular = app.add_subcommand("tabular", "TD(0) on chain MDPs, sampled reward vs sample-mean estimator");
  tabular->add_option("--preset", tab.preset, "chain5 or chain10");
  tabular->add_option("--reward", tab.reward, "reward value");
  tabular->add_option("--prob", tab.prob, "reward probability");
  tabular->add_option("--gamma", tab.gamma, "discount");
  tabular->add_option("--noise", tab.noise, "reward corruption, e.g. gaussian:0.3");
  tabular->add_option("--alphas", tab.alphas, "learning rates")->delimiter(',');
  tabular->add_option("--seeds", tab.seeds, "number of seeds (0..n-1)")->check(CLI::PositiveNumber);
  tabular->add_option("--episodes", tab.episodes, "episodes per run")->check(CLI::PositiveNumber);
  tabular->add_option("--key", tab.key_mode, "estimator key: s, sa or sas");
  tabular->add_option("--workers", tab.workers, "worker threads")->check(CLI::PositiveNumber);
  tabular->add_option("--out", tab.out, "output CSV (stdout if omitted)");

  VarianceArgs var;
  auto* variance = app.add_subcommand("variance", "Monte-Carlo checks of the target-variance identities");
  variance->add_option("--check", var.check, "mean, cov, gap or tables");
  variance->add_option("--trials", var.trials, "Monte-Carlo trials");
  variance->add_option("--seed", var.seed, "RNG seed");
  variance->add_option("--out", var.out, "output CSV (stdout if omitted)");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "actor-critic training with a sampled or estimated reward");
  train->add_option("--env", tr.env, "pointmass, grid5, chain5 or chain10");
  train->add_option("--noise", tr.noise, "reward corruption, e.g. uniform:0.3");
  train->add_option("--algo", tr.algo, "a2c or clipped");
  train->add_option("--source", tr.source, "sampled or estimated:<s|sa|sas>");
  train->add_option("--seeds", tr.seeds, "number of seeds (0..n-1)")->check(CLI::PositiveNumber);
  train->add_option("--updates", tr.updates, "number of updates")->check(CLI::PositiveNumber);
  train->add_option("--workers", tr.workers, "worker threads")->check(CLI::PositiveNumber);
  train->add_option("--save", tr.save_dir, "directory for parameter files");
  train->add_option("--out", tr.out, "output CSV (stdout if omitted)");

  std::string suite_path;
  auto* suite = app.add_subcommand("suite", "run a suite config file");
  suite->add_option("config", suite_path, "suite config")->required();

  double ours = 0, best = 0, random_policy = 0;
  auto* score = app.add_subcommand("score", "normalized improvement over a baseline");
  score->add_option("--ours", ours)->required();
  score->add_option("--baseline", best)->required();
  score->add_option("--random", random_policy)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*tabular) return run_tabular(tab);
    if (*variance) return run_variance(var);
    if (*train) return run_train(tr);
    if (*suite) {
      const auto outcome = run_suite(std::filesystem::path(suite_path));
      return outcome.exit_code;
    }
    if (*score) {
      std::cout << format_double(normalized_improvement(ours, best, random_policy)) << '\n';
      return kExitOk;
    }
  } catch (const SuiteError& e) {
    std::cerr << "lab: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::invalid_argument& e) {
    std::cerr << "lab: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "lab: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}
