#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rewardlab/tabular.hpp"

using namespace rewardlab;

namespace {

Transition chain_step(int s, int next, double r, bool terminal) {
  Transition t;
  t.state = {static_cast<double>(s)};
  t.action = {0.0};
  t.next_state = {static_cast<double>(next)};
  t.reward_true = t.reward_observed = r;
  t.terminal = terminal;
  return t;
}

}  // namespace

TEST_CASE("sample mean estimator") {
  SampleMeanEstimator est;
  const auto key = make_key(KeyMode::S, 0, 0, 1);
  CHECK_FALSE(est.mean(key));
  CHECK_FALSE(est.fitted());
  est.observe(key, 5.0);
  CHECK(*est.mean(key) == 5.0);
  CHECK(est.count(key) == 1);

  SampleMeanEstimator e2;
  const std::vector<double> obs = {1, 0, 1, 0};
  for (std::size_t i = 0; i < obs.size(); ++i) {
    e2.observe(key, obs[i]);
    CHECK(e2.count(key) == i + 1);
  }
  CHECK(*e2.mean(key) == 0.5);
  CHECK(e2.fitted());
}

TEST_CASE("running mean equals the arithmetic mean") {
  Rng rng = make_rng(5);
  std::normal_distribution<double> d(3.0, 2.0);
  SampleMeanEstimator est;
  const auto key = make_key(KeyMode::S, 2, 0, 3);
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) {
    xs.push_back(d(rng));
    est.observe(key, xs.back());
  }
  const double oracle = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  CHECK(*est.mean(key) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("Bernoulli sample mean within the CLT bound") {
  Rng rng = make_rng(6);
  std::bernoulli_distribution pays(0.5);
  SampleMeanEstimator est;
  const auto key = make_key(KeyMode::S, 0, 0, 1);
  for (int i = 0; i < 10000; ++i) est.observe(key, pays(rng) ? 5.0 : 0.0);
  CHECK(std::abs(*est.mean(key) - 2.5) <= 3.0 * 2.5 / 100.0);
}

TEST_CASE("key modes separate what they condition on") {
  SampleMeanEstimator s(KeyMode::S), sa(KeyMode::SA), sas(KeyMode::SAS);
  for (auto* e : {&s, &sa, &sas}) {
    e->observe(make_key(e->key_mode(), 0, 0, 1), 1.0);
    e->observe(make_key(e->key_mode(), 0, 1, 1), 3.0);
    e->observe(make_key(e->key_mode(), 0, 1, 2), 5.0);
  }
  CHECK(s.num_keys() == 1);
  CHECK(sa.num_keys() == 2);
  CHECK(sas.num_keys() == 3);
  CHECK(*s.mean(make_key(KeyMode::S, 0, 7, 9)) == 3.0);
  CHECK(*sa.mean(make_key(KeyMode::SA, 0, 1, 9)) == 4.0);
  CHECK(make_key(KeyMode::S, 4, 2, 5).action == -1);
}

TEST_CASE("predict throws for unseen keys") {
  SampleMeanEstimator est;
  CHECK_THROWS_AS(est.predict(chain_step(0, 1, 1.0, false)), std::out_of_range);
}

TEST_CASE("td_target") {
  ValueTable v(3, 1.0, {2});
  v.set(1, 0.5);
  CHECK(td_target(v, chain_step(0, 1, 1.0, false)).value == 1.5);

  SampleMeanEstimator est;
  est.observe(make_key(KeyMode::S, 0, 0, 1), 0.5);
  const auto t = td_target(v, chain_step(0, 1, 1.0, false), &est);
  CHECK(t.value == 1.0);
  CHECK_FALSE(t.fallback);

  ValueTable g(2, 0.9, {1});
  CHECK(td_target(g, chain_step(0, 1, 1.0, true)).value == 1.0);

  SampleMeanEstimator empty;
  const auto f = td_target(v, chain_step(0, 1, 2.0, false), &empty);
  CHECK(f.fallback);
  CHECK(f.value == 2.5);
}

TEST_CASE("td_update") {
  ValueTable v(3, 1.0, {2});
  v.set(1, 0.5);
  td_update(v, chain_step(0, 1, 1.0, false), 1.0);
  CHECK(v[0] == 1.5);

  ValueTable w(2, 1.0, {1});
  w.set(0, 1.0);
  for (double a : {0.1, 0.5, 1.0}) {
    td_update(w, chain_step(0, 1, 1.0, true), a);
    CHECK(w[0] == 1.0);
  }

  ValueTable u(2, 1.0, {1});
  td_update(u, chain_step(0, 1, 1.0, true), 0.5);
  td_update(u, chain_step(0, 1, 1.0, true), 0.5);
  CHECK(u[0] == 0.75);

  CHECK_THROWS_AS(td_update(u, chain_step(0, 1, 1.0, true), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(td_update(u, chain_step(0, 1, 1.0, true), 1.5), std::invalid_argument);
  u.set(1, 9.0);
  CHECK(u[1] == 0.0);
}

TEST_CASE("rmse") {
  const auto chain = build_chain(3, 1.0, 0.5);
  ValueTable v = ValueTable::for_chain(chain);
  const auto truth = true_values(chain);
  for (int s = 0; s < 3; ++s) v.set(s, truth[static_cast<std::size_t>(s)]);
  CHECK(rmse(v, truth) == 0.0);
  ValueTable z(4, 1.0, {3});
  CHECK(rmse(z, {1, 1, 1, 0}) == 1.0);
  CHECK_THROWS_AS(rmse(z, {1, 1}), std::invalid_argument);
}

TEST_CASE("deterministic reward with alpha = 1 is exact after num_reward_steps episodes") {
  const auto chain = build_chain(5, 1.0, 1.0);
  for (auto src : {TabularSource::Sampled, TabularSource::Estimator}) {
    const auto curve = run_td_learner(chain, NoiseModel::identity(), 1.0, src, 5, 1, 2);
    CHECK(curve.rmse_per_episode.back() == 0.0);
    CHECK(curve.rmse_per_episode[3] > 0.0);
  }
}

TEST_CASE("tiny alpha barely moves from the zero table") {
  const auto chain = build_chain(5, 5.0, 0.5);
  const auto truth = true_values(chain);
  const double zero_rmse = rmse(ValueTable::for_chain(chain), truth);
  for (auto src : {TabularSource::Sampled, TabularSource::Estimator}) {
    const auto curve = run_td_learner(chain, NoiseModel::identity(), 1e-6, src, 100, 3, 4);
    CHECK(curve.rmse_per_episode.back() == doctest::Approx(zero_rmse).epsilon(1e-3));
  }
}

TEST_CASE("converged estimator gives the true values as TD fixed point") {
  const auto chain = build_chain(5, 5.0, 0.5);
  const auto truth = true_values(chain);
  for (double alpha : {0.1, 0.5, 1.0}) {
    SampleMeanEstimator est;
    Rng rng = make_rng(8);
    std::bernoulli_distribution pays(chain.reward_prob);
    for (int s = 0; s < chain.num_reward_steps; ++s)
      for (int i = 0; i < 1000000; ++i) est.observe(make_key(KeyMode::S, s, 0, s + 1), pays(rng) ? 5.0 : 0.0);
    ValueTable v = ValueTable::for_chain(chain);
    for (int ep = 0; ep < 2000; ++ep)
      for (int s = 0; s < chain.num_reward_steps; ++s)
        td_update(v, chain_step(s, s + 1, pays(rng) ? 5.0 : 0.0, s + 1 == chain.num_reward_steps), alpha, &est);
    CHECK(rmse(v, truth) <= 1e-2);
  }
}

TEST_CASE("first visits fall back to the sampled reward") {
  const auto chain = build_chain(5, 2.0, 0.5);
  const auto est = run_td_learner(chain, NoiseModel::identity(), 0.5, TabularSource::Estimator, 20, 1, 2);
  CHECK(est.fallback_events == 5);
  const auto smp = run_td_learner(chain, NoiseModel::identity(), 0.5, TabularSource::Sampled, 20, 1, 2);
  CHECK(smp.fallback_events == 0);
}

TEST_CASE("the reward source never changes the reward stream") {
  const auto chain = build_chain(10, 5.0, 0.5);
  const auto a = run_td_learner(chain, NoiseModel::gaussian(0.4), 0.5, TabularSource::Sampled, 50, 1, 2);
  const auto b = run_td_learner(chain, NoiseModel::gaussian(0.4), 0.5, TabularSource::Estimator, 50, 1, 2);
  for (int s = 0; s < 10; ++s) {
    const auto key = make_key(KeyMode::S, s, 0, s + 1);
    CHECK(*a.estimator.mean(key) == *b.estimator.mean(key));
    CHECK(a.estimator.count(key) == 50);
  }
}

TEST_CASE("experiment records are ordered, paired and reproducible") {
  TabularConfig cfg;
  cfg.preset = "chain5";
  cfg.reward_value = 5.0;
  cfg.alphas = {0.5, 1.0};
  cfg.seeds = {0, 1, 2};
  cfg.workers = 2;
  const auto r1 = run_tabular_experiment(cfg);
  const auto r2 = run_tabular_experiment(cfg);
  REQUIRE(r1.size() == 12);
  for (std::size_t i = 0; i < r1.size(); ++i) {
    CHECK(to_csv_row(r1[i]) == to_csv_row(r2[i]));
    CHECK(r1[i].source == (i % 2 == 0 ? TabularSource::Sampled : TabularSource::Estimator));
    CHECK(r1[i].alpha == (i < 6 ? 0.5 : 1.0));
    CHECK(r1[i].seed == (i / 2) % 3);
  }
  CHECK(tabular_csv_header() == "preset,reward_value,prob,alpha,source,seed,mean_rmse,fallback_events");
  CHECK(to_csv_row(r1[1]).rfind("chain5,5,0.5,0.5,estimator,0,", 0) == 0);

  cfg.alphas = {0.0};
  CHECK_THROWS_AS(run_tabular_experiment(cfg), std::invalid_argument);
  cfg.alphas = {0.5};
  cfg.preset = "grid5";
  CHECK_THROWS_AS(run_tabular_experiment(cfg), std::invalid_argument);
}

TEST_CASE("estimator beats sampled rewards at alpha = 1 on chain5 +5") {
  TabularConfig cfg;
  cfg.reward_value = 5.0;
  cfg.alphas = {1.0};
  const auto records = run_tabular_experiment(cfg);
  int wins = 0;
  for (std::size_t i = 0; i < records.size(); i += 2) wins += records[i + 1].mean_rmse < records[i].mean_rmse;
  CHECK(wins >= 9);
}
