#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rewardlab/env.hpp"
#include "rewardlab/noise.hpp"
#include "rewardlab/reward_model.hpp"

namespace rewardlab {

enum class KeyMode { S, SA, SAS };

struct TransitionKey {
  int state = -1;
  int action = -1;
  int next_state = -1;
  auto operator<=>(const TransitionKey&) const = default;
};

// Fields outside the mode are left at -1.
TransitionKey make_key(KeyMode mode, int state, int action, int next_state);
// Keys a tabular transition (scalar state / action index in element 0).
TransitionKey make_key(KeyMode mode, const Transition& t);

// Running sample mean of observed rewards per key.
class SampleMeanEstimator final : public RewardModel {
 public:
  explicit SampleMeanEstimator(KeyMode mode = KeyMode::S) : mode_(mode) {}

  void observe(const TransitionKey& key, double reward_observed);
  void observe(const Transition& t) { observe(make_key(mode_, t), t.reward_observed); }

  std::optional<double> mean(const TransitionKey& key) const;
  std::size_t count(const TransitionKey& key) const;
  KeyMode key_mode() const { return mode_; }
  std::size_t num_keys() const { return table_.size(); }

  // Throws std::out_of_range for a key that was never observed.
  double predict(const Transition& t) const override;
  bool fitted() const override { return !table_.empty(); }

 private:
  struct Entry {
    std::size_t count = 0;
    double mean = 0.0;
  };
  KeyMode mode_;
  std::map<TransitionKey, Entry> table_;
};

// V(s) per state; terminal states stay at 0.
class ValueTable {
 public:
  ValueTable(int num_states, double gamma, std::vector<int> terminal_states = {});
  static ValueTable for_chain(const ChainMdp& chain);

  double operator[](int s) const { return values_.at(static_cast<std::size_t>(s)); }
  void set(int s, double v);
  bool is_terminal(int s) const { return terminal_.at(static_cast<std::size_t>(s)); }
  double gamma() const { return gamma_; }
  int size() const { return static_cast<int>(values_.size()); }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
  std::vector<bool> terminal_;
  double gamma_;
};

struct TdTarget {
  double value = 0.0;
  bool fallback = false;  // estimator had no sample for this key
};

// Sampled source when estimator is null: r_observed + gamma V(s').
// Estimator source: R̂(key) + gamma V(s'), falling back to r_observed for
// unseen keys. Terminal s' bootstraps with 0.
TdTarget td_target(const ValueTable& v, const Transition& t,
                   const SampleMeanEstimator* estimator = nullptr);

// V(s) <- V(s) + alpha (target - V(s)). alpha must lie in (0, 1].
TdTarget td_update(ValueTable& v, const Transition& t, double alpha,
                   const SampleMeanEstimator* estimator = nullptr);

// Root mean squared error over non-terminal states.
double rmse(const ValueTable& v, const std::vector<double>& truth);

enum class TabularSource { Sampled, Estimator };
std::string source_name(TabularSource s);

struct LearnerCurve {
  std::vector<double> rmse_per_episode;  // after each episode
  int fallback_events = 0;
  ValueTable values;
  SampleMeanEstimator estimator;
};

// Online TD(0) on a chain for `episodes` episodes. The estimator source
// reads R̂ before recording the current reward.
LearnerCurve run_td_learner(const ChainMdp& chain, const NoiseModel& noise, double alpha,
                            TabularSource source, int episodes, std::uint64_t env_seed,
                            std::uint64_t noise_seed, KeyMode key_mode = KeyMode::S);

std::vector<double> default_alpha_grid();

struct TabularConfig {
  std::string preset = "chain5";
  double reward_value = 1.0;
  double reward_prob = 0.5;
  double gamma = 1.0;
  NoiseModel noise;
  std::vector<double> alphas = default_alpha_grid();
  int episodes = 100;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  KeyMode key_mode = KeyMode::S;
  int workers = 1;
};

struct TabularRecord {
  std::string preset;
  double reward_value = 0.0;
  double prob = 0.0;
  double alpha = 0.0;
  TabularSource source = TabularSource::Sampled;
  std::uint64_t seed = 0;
  double mean_rmse = 0.0;
  int fallback_events = 0;
};

// One record per (alpha, source, seed), ordered alpha-major, then seed,
// then source. Both sources of a cell see the same reward stream.
std::vector<TabularRecord> run_tabular_experiment(const TabularConfig& config);

std::string tabular_csv_header();
std::string to_csv_row(const TabularRecord& r);

}  // namespace rewardlab
