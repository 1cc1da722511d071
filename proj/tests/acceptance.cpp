// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rewardlab/agents.hpp"
#include "rewardlab/harness.hpp"
#include "rewardlab/losses.hpp"
#include "rewardlab/tabular.hpp"
#include "rewardlab/variance.hpp"
#include "test_support.hpp"

using namespace rewardlab;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr int kSeeds = 10;
constexpr int kTabularMinWins = 9;
constexpr double kSampleMeanRelTol = 0.05;
constexpr std::size_t kSampleMeanTrials = 1'000'000;
constexpr std::size_t kGapTrials = 1'000'000;
constexpr std::size_t kGapBatches = 100;
constexpr double kGapSigmas = 3.0;
constexpr double kSparsityRelTol = 0.05;
constexpr double kGradRelTol = 1e-4;
constexpr double kSignTestAlpha = 0.05;
constexpr double kZeroNoiseRelTol = 0.10;
constexpr double kPongRelTol = 0.02;
constexpr double kPongReference = 1882.6;

// Training budget shared by the function-approximation criteria.
const char* kTrainSettings =
    "suite.seeds = 0,1,2,3,4,5,6,7,8,9\n"
    "train.sources = sampled, estimated:sa\n";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path workdir() {
  const auto dir = fs::temp_directory_path() / "rewardlab_acceptance";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// P(X >= k) for X ~ Binomial(n, 1/2).
double sign_test_p(int k, int n) {
  double tail = 0.0;
  for (int i = k; i <= n; ++i) tail += std::exp(std::lgamma(n + 1) - std::lgamma(i + 1) - std::lgamma(n - i + 1) - n * std::log(2.0));
  return tail;
}

// Final checkpoint per (source, seed) of a two-source train suite.
struct PairedFinals {
  std::map<std::string, std::vector<double>> returns;
  std::map<std::string, std::vector<double>> sq_advantage;
};

PairedFinals run_train_suite(const std::string& tag, const std::string& body) {
  auto cfg = parse_suite_config(std::string(kTrainSettings) + body);
  cfg.results_path = workdir() / (tag + "_results.csv");
  cfg.summary_path = workdir() / (tag + "_summary.csv");
  const auto out = run_suite(cfg);
  std::map<std::pair<std::string, std::uint64_t>, CheckpointRecord> last;
  for (const auto& r : out.records) last[{r.source, r.seed}] = r.checkpoint;
  PairedFinals f;
  for (const auto& src : cfg.sources)
    for (auto seed : cfg.seeds) {
      const auto& c = last.at({src.label(), seed});
      f.returns[src.label()].push_back(c.mean_return);
      f.sq_advantage[src.label()].push_back(c.mean_sq_advantage);
    }
  return f;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Outcome tabular_rmse() {
  std::string worst;
  int min_wins = kSeeds + 1;
  bool ok = true;
  for (const char* preset : {"chain5", "chain10"})
    for (double reward : {1.0, 2.0, 5.0}) {
      TabularConfig t;
      t.preset = preset;
      t.reward_value = reward;
      t.alphas = {0.5, 0.75, 1.0};
      const auto records = run_tabular_experiment(t);
      for (std::size_t ai = 0; ai < t.alphas.size(); ++ai) {
        int wins = 0;
        for (std::size_t s = 0; s < t.seeds.size(); ++s) {
          const auto& sampled = records[(ai * t.seeds.size() + s) * 2];
          const auto& est = records[(ai * t.seeds.size() + s) * 2 + 1];
          wins += est.mean_rmse < sampled.mean_rmse;
        }
        if (wins < min_wins) {
          min_wins = wins;
          worst = fmt("%s +%g alpha=%g", preset, reward, t.alphas[ai]);
        }
        ok = ok && wins >= kTabularMinWins;
      }
    }
  return {ok, fmt("18 cells, fewest estimator wins %d/10 (%s), need >= %d", min_wins, worst.c_str(), kTabularMinWins)};
}

Outcome sample_mean_variance() {
  Rng rng = make_rng(2024);
  double worst = 0.0;
  bool ok = true;
  for (const auto& law : {RewardLaw::bernoulli(0.5, 5.0), RewardLaw::gaussian(0.0, 1.0)})
    for (int n : {1, 10, 100}) {
      const auto c = verify_sample_mean_variance(law, n, kSampleMeanTrials, rng);
      worst = std::max(worst, std::abs(c.relative_error()));
      ok = ok && c.within(kSampleMeanRelTol);
    }
  return {ok, fmt("worst |ratio*N - 1| = %.4f over 6 cases, tolerance %.2f", worst, kSampleMeanRelTol)};
}

Outcome variance_gap_condition() {
  Rng rng = make_rng(2025);
  bool ok = true;
  std::string detail;
  for (double coupling : {0.5, 0.0, -1.0}) {
    const CoupledLaw law{RewardLaw::bernoulli(0.5, 5.0), coupling, 1.0};
    const auto e = run_gap_experiment(law, 10, kGapTrials, kGapBatches, rng);
    const double z = std::abs(e.report.measured_gap - e.analytic_gap) / e.report.standard_error;
    const bool agrees = z <= kGapSigmas;
    const bool sign_matches = e.report.estimator_no_worse == e.report.covariance_condition;
    ok = ok && agrees && sign_matches;
    detail += fmt("cov%+.2f: gap %.3f vs %.3f (%.1f SE)%s; ", law.cov_reward_value(), e.report.measured_gap,
                  e.analytic_gap, z, sign_matches ? "" : " sign mismatch");
  }
  return {ok, detail};
}

Outcome sparsity_expectation() {
  bool ok = true;
  std::string detail;
  for (double eps : {0.5, 0.9}) {
    const NoiseModel noise = NoiseModel::sparse(eps);

    // Tabular: per-state sample mean on a fixed chain.
    const ChainMdp chain = build_chain(5, 5.0, 0.5, 1.0);
    NoisyEnvironment env(std::make_unique<ChainEnv>(chain), noise, 7);
    Rng env_rng = make_rng(8);
    SampleMeanEstimator est(KeyMode::S);
    for (int ep = 0; ep < 400000; ++ep) {
      env.reset(env_rng);
      while (!env.done()) est.observe(env.step(Vec{0.0}, env_rng));
    }
    const double target = (1.0 - eps) * 2.5;
    double tab_err = 0.0;
    for (int s = 0; s < 5; ++s) tab_err = std::max(tab_err, std::abs(*est.mean({s, -1, -1}) / target - 1.0));

    // Parametric: regression on point-mass transitions under uniform random actions.
    const ActionSpace space{ActionSpace::Kind::Continuous, 1};
    auto collect = [&](std::size_t n, std::uint64_t seed) {
      NoisyEnvironment pm(make_environment("pointmass", {}), noise, seed);
      Rng r = make_rng(seed, 1);
      std::vector<Transition> out;
      pm.reset(r);
      while (out.size() < n) {
        Transition t = pm.step(space.sample_uniform(r), r);
        if (t.terminal) pm.reset(r);
        out.push_back(std::move(t));
      }
      return out;
    };
    const auto train = collect(50000, 11);
    const auto test = collect(20000, 12);
    Rng rng = make_rng(13);
    Mlp net = Mlp::orthogonal({feature_dim(FeatureMode::SA, 2, space), 64, 64, 1}, 1.0, 1.0, rng);
    Adam opt(net.parameter_count());
    std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
    std::vector<Transition> mb(256);
    for (int step = 0; step < 4000; ++step) {
      for (auto& t : mb) t = train[pick(rng)];
      LossGrad lg = reward_regression_loss(net, mb, FeatureMode::SA, space);
      clip_gradient_norm(lg.grad, 0.5);
      Vector p = net.parameters();
      opt.step(p, lg.grad, step < 3000 ? 1e-3 : 1e-4);
      net.set_parameters(p);
    }
    ParametricRewardModel model(net, FeatureMode::SA, space);
    model.mark_fitted();
    double pred = 0.0, truth = 0.0;
    for (const auto& t : test) {
      pred += model.predict(t);
      truth += t.reward_true;
    }
    const double par_err = std::abs(pred / ((1.0 - eps) * truth) - 1.0);
    ok = ok && tab_err <= kSparsityRelTol && par_err <= kSparsityRelTol;
    detail += fmt("eps %.1f: tabular %.4f, parametric %.4f; ", eps, tab_err, par_err);
  }
  return {ok, detail + fmt("relative tolerance %.2f", kSparsityRelTol)};
}

Outcome gradient_integrity() {
  using rewardlab::testing::max_fd_relative_error;
  Rng rng = make_rng(77);
  std::map<std::string, double> worst;
  const ActionSpace discrete{ActionSpace::Kind::Discrete, 4};
  const ActionSpace continuous{ActionSpace::Kind::Continuous, 2};
  auto random_policy = [&](const ActionSpace& space) {
    Policy p(Mlp::orthogonal({3, 16, 16, space.size}, 1.0, 1.0, rng), space);
    Vector params = p.parameters();
    params.tail(p.parameter_count() - p.net().parameter_count()).setRandom();
    p.set_parameters(params);
    return p;
  };
  auto actions_for = [&](const Policy& p, const Matrix& obs) {
    Matrix a(p.space().discrete() ? 1 : p.space().size, obs.cols());
    for (Eigen::Index j = 0; j < obs.cols(); ++j) {
      const Vector col = obs.col(j);
      const auto s = p.act(Vec(col.data(), col.data() + col.size()), rng);
      for (std::size_t i = 0; i < s.action.size(); ++i) a(static_cast<Eigen::Index>(i), j) = s.action[i];
    }
    return a;
  };
  auto policy_check = [&](const Policy& p, auto&& loss) {
    const LossGrad lg = loss(p);
    return max_fd_relative_error(
        [&](const Vector& x) {
          Policy q = p;
          q.set_parameters(x);
          return loss(q).loss;
        },
        p.parameters(), lg.grad);
  };
  auto bump = [&](const std::string& k, double e) { worst[k] = std::max(worst[k], e); };
  bool sensitive = true;

  for (int point = 0; point < 3; ++point) {
    const Matrix obs = Matrix::Random(3, 16);

    Mlp reg = Mlp::orthogonal({3, 32, 32, 1}, 1.0, 1.0, rng);
    std::vector<Transition> batch(16);
    for (int j = 0; j < 16; ++j) {
      batch[static_cast<std::size_t>(j)].state = {obs(0, j), obs(1, j)};
      batch[static_cast<std::size_t>(j)].action = {obs(2, j)};
      batch[static_cast<std::size_t>(j)].reward_observed = obs(0, j) * obs(1, j) + 0.3;
    }
    const LossGrad rl = reward_regression_loss(reg, batch, FeatureMode::SA, {ActionSpace::Kind::Continuous, 1});
    bump("reward", max_fd_relative_error(
                       [&](const Vector& x) {
                         Mlp m = reg;
                         m.set_parameters(x);
                         return reward_regression_loss(m, batch, FeatureMode::SA, {ActionSpace::Kind::Continuous, 1}).loss;
                       },
                       reg.parameters(), rl.grad));

    Mlp critic = Mlp::orthogonal({3, 32, 32, 1}, 1.0, 1.0, rng);
    const Vector targets = Vector::Random(16);
    const LossGrad cl = critic_loss(critic, obs, targets);
    bump("critic", max_fd_relative_error(
                       [&](const Vector& x) {
                         Mlp m = critic;
                         m.set_parameters(x);
                         return critic_loss(m, obs, targets).loss;
                       },
                       critic.parameters(), cl.grad));
    // The checker itself must flag a gradient that is off by 0.1%.
    sensitive = sensitive && max_fd_relative_error(
                                 [&](const Vector& x) {
                                   Mlp m = critic;
                                   m.set_parameters(x);
                                   return critic_loss(m, obs, targets).loss;
                                 },
                                 critic.parameters(), 1.001 * cl.grad) > kGradRelTol;

    for (const auto& space : {discrete, continuous}) {
      const Policy p = random_policy(space);
      const Matrix acts = actions_for(p, obs);
      const Vector adv = Vector::Random(16);
      bump("a2c", policy_check(p, [&](const Policy& q) { return a2c_actor_loss(q, obs, acts, adv, 0.01); }));
      Vector old = p.evaluate(obs, acts).log_probs;
      for (Eigen::Index i = 0; i < old.size(); ++i) {
        const double shift = (i % 4 == 0 ? 0.5 : i % 4 == 1 ? -0.5 : 0.05) * (i % 2 ? 1 : -1);
        old[i] -= shift;
      }
      bump("clipped",
           policy_check(p, [&](const Policy& q) { return clipped_surrogate_loss(q, obs, acts, old, adv, 0.2, 0.01); }));
    }
  }
  bool ok = sensitive;
  std::string detail = sensitive ? "" : "checker missed a 0.1% gradient error; ";
  for (const auto& [k, v] : worst) {
    ok = ok && v <= kGradRelTol;
    detail += fmt("%s %.2e; ", k.c_str(), v);
  }
  return {ok, detail + fmt("tolerance %.0e", kGradRelTol)};
}

struct FunctionApprox {
  Outcome directional;
  Outcome advantage;
};

FunctionApprox function_approximation() {
  FunctionApprox out;
  bool ok = true;
  std::string detail;
  auto directional = [&](const std::string& tag, const std::string& body) {
    const auto f = run_train_suite(tag, body);
    const auto& s = f.returns.at("sampled");
    const auto& e = f.returns.at("estimated:sa");
    int wins = 0;
    for (std::size_t i = 0; i < s.size(); ++i) wins += e[i] > s[i];
    const double p = sign_test_p(wins, static_cast<int>(s.size()));
    ok = ok && p < kSignTestAlpha;
    detail += fmt("%s: wins %d/10 (p=%.4f), means %.3f vs %.3f; ", tag.c_str(), wins, p, mean(e), mean(s));
  };
  auto zero_noise = [&](const std::string& tag, const std::string& body) {
    const auto f = run_train_suite(tag, body);
    const double s = mean(f.returns.at("sampled"));
    const double e = mean(f.returns.at("estimated:sa"));
    const double rel = std::abs(e - s) / std::abs(s);
    ok = ok && rel <= kZeroNoiseRelTol;
    detail += fmt("%s: %.3f vs %.3f (%.1f%%); ", tag.c_str(), e, s, 100 * rel);
  };
  directional("pointmass_uniform", "env.id = pointmass\nnoise.kind = uniform\nnoise.epsilon = 0.3\n");
  directional("grid5_gaussian", "env.id = grid5\nnoise.kind = gaussian\nnoise.sigma = 0.3\n");
  zero_noise("pointmass_clean", "env.id = pointmass\nnoise.kind = none\n");
  zero_noise("grid5_clean", "env.id = grid5\nnoise.kind = none\n");
  out.directional = {ok, detail};

  const auto f = run_train_suite("pointmass_gaussian", "env.id = pointmass\nnoise.kind = gaussian\nnoise.sigma = 0.4\n");
  const auto& s = f.sq_advantage.at("sampled");
  const auto& e = f.sq_advantage.at("estimated:sa");
  int lower = 0;
  for (std::size_t i = 0; i < s.size(); ++i) lower += e[i] < s[i];
  out.advantage = {2 * lower > static_cast<int>(s.size()),
                   fmt("estimator mean A^2 lower in %d/10 seeds (%.4f vs %.4f)", lower, mean(e), mean(s))};
  return out;
}

Outcome scoring() {
  const double pong = normalized_improvement(-15.08, -20.42, -20.7);
  const double rel = std::abs(pong - kPongReference) / kPongReference;
  bool ok = rel <= kPongRelTol;
  ok = ok && normalized_improvement(10, 5, 0) == 100.0;
  ok = ok && normalized_improvement(-3.0, -3.0, -7.0) == 0.0;
  bool undefined = false;
  try {
    normalized_improvement(1.0, 2.0, 2.0);
  } catch (const SuiteError& e) {
    undefined = e.code() == SuiteErrorCode::UndefinedScore;
  }
  ok = ok && undefined;
  return {ok, fmt("pong %.2f%% vs reference %.1f%% (%.2f%% off); 10/5/0 -> 100%%, self -> 0%%, zero denominator %s",
                  pong, kPongReference, 100 * rel, undefined ? "rejected" : "accepted")};
}

Outcome determinism() {
  const std::string text =
      "suite.id = det\nenv.id = pointmass\nnoise.kind = uniform\nnoise.epsilon = 0.3\n"
      "suite.seeds = 5,6\nsuite.workers = 2\ntrain.sources = sampled, estimated:sa\n"
      "train.updates = 5\ntrain.num_envs = 4\n";
  std::vector<std::string> results, summaries;
  for (int run = 0; run < 2; ++run) {
    auto cfg = parse_suite_config(text);
    cfg.results_path = workdir() / fmt("det%d_results.csv", run);
    cfg.summary_path = workdir() / fmt("det%d_summary.csv", run);
    run_suite(cfg);
    results.push_back(slurp(cfg.results_path));
    summaries.push_back(slurp(cfg.summary_path));
  }
  TabularConfig t;
  t.alphas = {0.5};
  const auto a = run_tabular_experiment(t), b = run_tabular_experiment(t);
  bool tab_same = a.size() == b.size();
  for (std::size_t i = 0; tab_same && i < a.size(); ++i) tab_same = to_csv_row(a[i]) == to_csv_row(b[i]);
  const bool ok = results[0] == results[1] && summaries[0] == summaries[1] && tab_same && !results[0].empty();
  return {ok, fmt("results %zu bytes %s, summary %s, tabular %s", results[0].size(),
                  results[0] == results[1] ? "identical" : "differ", summaries[0] == summaries[1] ? "identical" : "differ",
                  tab_same ? "identical" : "differ")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o, double seconds) {
    std::printf("criterion %d %-28s %s  %s [%.1fs]\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += !o.pass;
  };
  auto timed = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = fn();
    report(id, name, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  };
  timed(1, "tabular-rmse", tabular_rmse);
  timed(2, "sample-mean-variance", sample_mean_variance);
  timed(3, "variance-gap-condition", variance_gap_condition);
  timed(4, "sparsity-expectation", sparsity_expectation);
  timed(5, "gradient-integrity", gradient_integrity);
  const auto t0 = std::chrono::steady_clock::now();
  const FunctionApprox fa = function_approximation();
  const double fa_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(6, "estimator-beats-sampled", fa.directional, fa_seconds);
  report(7, "advantage-magnitude", fa.advantage, 0.0);
  timed(8, "scoring-arithmetic", scoring);
  timed(9, "determinism", determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
