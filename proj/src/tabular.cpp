#include "rewardlab/tabular.hpp"

#include <cmath>
#include <stdexcept>

#include "rewardlab/csv.hpp"
#include "rewardlab/parallel.hpp"
#include "rewardlab/random.hpp"

namespace rewardlab {

TransitionKey make_key(KeyMode mode, int s, int a, int sn) {
  switch (mode) {
    case KeyMode::S: return {s, -1, -1};
    case KeyMode::SA: return {s, a, -1};
    case KeyMode::SAS: return {s, a, sn};
  }
  return {s, -1, -1};
}

TransitionKey make_key(KeyMode mode, const Transition& t) {
  if (t.state.empty() || t.action.empty() || t.next_state.empty())
    throw std::invalid_argument("tabular key needs scalar state, action and next state");
  return make_key(mode, static_cast<int>(t.state[0]), static_cast<int>(t.action[0]),
                  static_cast<int>(t.next_state[0]));
}

void SampleMeanEstimator::observe(const TransitionKey& key, double r) {
  Entry& e = table_[key];
  ++e.count;
  e.mean += (r - e.mean) / static_cast<double>(e.count);
}

std::optional<double> SampleMeanEstimator::mean(const TransitionKey& key) const {
  auto it = table_.find(key);
  if (it == table_.end()) return std::nullopt;
  return it->second.mean;
}

std::size_t SampleMeanEstimator::count(const TransitionKey& key) const {
  auto it = table_.find(key);
  return it == table_.end() ? 0 : it->second.count;
}

double SampleMeanEstimator::predict(const Transition& t) const {
  auto m = mean(make_key(mode_, t));
  if (!m) throw std::out_of_range("sample-mean estimator has no data for this transition");
  return *m;
}

ValueTable::ValueTable(int num_states, double gamma, std::vector<int> terminal_states)
    : values_(static_cast<std::size_t>(num_states), 0.0),
      terminal_(static_cast<std::size_t>(num_states), false),
      gamma_(gamma) {
  if (num_states < 1) throw std::invalid_argument("value table needs at least one state");
  for (int s : terminal_states) terminal_.at(static_cast<std::size_t>(s)) = true;
}

ValueTable ValueTable::for_chain(const ChainMdp& chain) {
  return ValueTable(chain.num_states(), chain.gamma, {chain.terminal_state()});
}

void ValueTable::set(int s, double v) {
  if (is_terminal(s)) return;
  values_.at(static_cast<std::size_t>(s)) = v;
}

TdTarget td_target(const ValueTable& v, const Transition& t, const SampleMeanEstimator* est) {
  const int next = static_cast<int>(t.next_state.at(0));
  const double bootstrap = t.terminal ? 0.0 : v.gamma() * v[next];
  if (!est) return {t.reward_observed + bootstrap, false};
  if (auto rhat = est->mean(make_key(est->key_mode(), t))) return {*rhat + bootstrap, false};
  return {t.reward_observed + bootstrap, true};
}

TdTarget td_update(ValueTable& v, const Transition& t, double alpha,
                   const SampleMeanEstimator* est) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  const TdTarget target = td_target(v, t, est);
  const int s = static_cast<int>(t.state.at(0));
  v.set(s, v[s] + alpha * (target.value - v[s]));
  return target;
}

double rmse(const ValueTable& v, const std::vector<double>& truth) {
  if (static_cast<int>(truth.size()) != v.size())
    throw std::invalid_argument("rmse: value table and truth differ in size");
  double sum = 0.0;
  int n = 0;
  for (int s = 0; s < v.size(); ++s) {
    if (v.is_terminal(s)) continue;
    const double d = v[s] - truth[static_cast<std::size_t>(s)];
    sum += d * d;
    ++n;
  }
  return n == 0 ? 0.0 : std::sqrt(sum / n);
}

std::string source_name(TabularSource s) {
  return s == TabularSource::Sampled ? "sampled" : "estimator";
}

LearnerCurve run_td_learner(const ChainMdp& chain, const NoiseModel& noise, double alpha,
                            TabularSource source, int episodes, std::uint64_t env_seed,
                            std::uint64_t noise_seed, KeyMode key_mode) {
  if (episodes < 0) throw std::invalid_argument("episodes must be nonnegative");
  LearnerCurve out{{}, 0, ValueTable::for_chain(chain), SampleMeanEstimator(key_mode)};
  const auto truth = true_values(chain);
  NoisyEnvironment env(std::make_unique<ChainEnv>(chain), noise, noise_seed);
  Rng rng = make_rng(env_seed);
  const SampleMeanEstimator* est = source == TabularSource::Estimator ? &out.estimator : nullptr;
  const Vec action{0.0};
  out.rmse_per_episode.reserve(static_cast<std::size_t>(episodes));
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(rng);
    while (!env.done()) {
      const Transition t = env.step(action, rng);
      if (td_update(out.values, t, alpha, est).fallback) ++out.fallback_events;
      out.estimator.observe(t);
    }
    out.rmse_per_episode.push_back(rmse(out.values, truth));
  }
  return out;
}

std::vector<double> default_alpha_grid() { return {0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0}; }

namespace {

int chain_length(const std::string& preset) {
  if (preset == "chain5") return 5;
  if (preset == "chain10") return 10;
  throw std::invalid_argument("tabular experiments need a chain preset, got " + preset);
}

}  // namespace

std::vector<TabularRecord> run_tabular_experiment(const TabularConfig& cfg) {
  const ChainMdp chain =
      build_chain(chain_length(cfg.preset), cfg.reward_value, cfg.reward_prob, cfg.gamma);
  cfg.noise.validate();
  if (cfg.alphas.empty()) throw std::invalid_argument("alpha grid is empty");
  for (double a : cfg.alphas)
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (cfg.seeds.empty()) throw std::invalid_argument("no seeds given");

  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<TabularRecord> records(cfg.alphas.size() * n_seeds * 2);
  parallel_for(cfg.alphas.size() * n_seeds, cfg.workers, [&](std::size_t cell) {
    const std::size_t ai = cell / n_seeds;
    const std::size_t si = cell % n_seeds;
    const SeedSet seeds = derive_seeds(cfg.seeds[si], ai);
    for (int k = 0; k < 2; ++k) {
      const auto source = k == 0 ? TabularSource::Sampled : TabularSource::Estimator;
      const LearnerCurve curve = run_td_learner(chain, cfg.noise, cfg.alphas[ai], source,
                                                cfg.episodes, seeds.env, seeds.noise, cfg.key_mode);
      double total = 0.0;
      for (double e : curve.rmse_per_episode) total += e;
      TabularRecord& r = records[cell * 2 + static_cast<std::size_t>(k)];
      r.preset = cfg.preset;
      r.reward_value = cfg.reward_value;
      r.prob = cfg.reward_prob;
      r.alpha = cfg.alphas[ai];
      r.source = source;
      r.seed = cfg.seeds[si];
      r.mean_rmse = cfg.episodes > 0 ? total / cfg.episodes : 0.0;
      r.fallback_events = curve.fallback_events;
    }
  });
  return records;
}

std::string tabular_csv_header() {
  return "preset,reward_value,prob,alpha,source,seed,mean_rmse,fallback_events";
}

std::string to_csv_row(const TabularRecord& r) {
  return r.preset + ',' + format_double(r.reward_value) + ',' + format_double(r.prob) + ',' +
         format_double(r.alpha) + ',' + source_name(r.source) + ',' + std::to_string(r.seed) + ',' +
         format_double(r.mean_rmse) + ',' + std::to_string(r.fallback_events);
}

}  // namespace rewardlab
