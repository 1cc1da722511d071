#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rewardlab/env.hpp"
#include "rewardlab/features.hpp"
#include "rewardlab/nn.hpp"
#include "rewardlab/noise.hpp"
#include "rewardlab/policy.hpp"

namespace rewardlab {

enum class Algorithm { A2C, ClippedPG };
Algorithm parse_algorithm(std::string_view text);  // "a2c", "clipped" / "ppo"
std::string algorithm_name(Algorithm algo);

// Which reward enters the TD error: the corrupted sample, or the learned
// estimate R̂ over the given features.
struct RewardSource {
  bool estimated = false;
  FeatureMode mode = FeatureMode::S;

  static RewardSource sampled() { return {}; }
  static RewardSource estimator(FeatureMode m) { return {true, m}; }
  std::string label() const;  // "sampled" or "estimated:<mode>"
  bool operator==(const RewardSource&) const = default;
};
RewardSource parse_reward_source(std::string_view text);

// Linear ramp of the weight on R̂ from 0 to 1 over the first
// total_warmup_updates updates.
struct WarmupSchedule {
  int total_warmup_updates = 0;
  int current_update = 0;
  double weight() const;
};

// w * rhat + (1 - w) * reward_observed
double effective_reward(const Transition& t, double rhat, const WarmupSchedule& schedule);

struct AdvantageConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip_epsilon = 0.2;
  void validate() const;
};

// One environment copy's rollout segment. values[i] = V(s_i);
// bootstrap_value = V(next_state of the last step), ignored if it is terminal.
struct RolloutBatch {
  std::vector<Transition> transitions;
  std::vector<double> values;
  double bootstrap_value = 0.0;
  std::vector<double> reward_estimates;  // R̂ per step; may be empty for the sampled source

  void validate(bool need_estimates) const;
};

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> value_targets;  // lambda-returns, equal to A + V
  std::vector<double> rewards;        // the reward that entered each TD error
};

// GAE with episode-boundary resets. The estimator source mixes R̂ with the
// observed reward through the warm-up schedule.
Advantages gae_advantages(const RolloutBatch& batch, const AdvantageConfig& cfg,
                          const RewardSource& source, const WarmupSchedule& schedule);

struct TrainConfig {
  std::string env = "pointmass";
  EnvOptions env_options;
  NoiseModel noise;
  Algorithm algo = Algorithm::ClippedPG;
  RewardSource source;
  int updates = 200;
  int num_envs = 8;
  int rollout_length = 32;
  AdvantageConfig advantage;
  std::vector<int> hidden = {64, 64};
  double policy_lr = 1e-3;
  double critic_lr = 1e-3;
  double reward_lr = 1e-3;
  int reward_buffer = 20000;   // most recent transitions the regressor samples from
  int reward_steps = 32;       // regressor minibatch steps per update
  int reward_batch = 256;
  int epochs = 4;
  int minibatches = 4;
  double entropy_coef = 0.0;
  double warmup_fraction = 0.2;
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;
  int trailing_window = 100;
  int checkpoint_every = 1;
  std::uint64_t seed = 0;
  std::uint64_t cell_index = 0;

  void validate() const;
};

// Desk-scale defaults per environment and algorithm.
TrainConfig default_train_config(std::string_view env, Algorithm algo);

struct CheckpointRecord {
  int update = 0;
  int episodes = 0;           // completed so far
  double mean_return = 0.0;   // true-reward return over the trailing window
  bool window_full = false;   // window holds trailing_window episodes
  double mean_abs_advantage = 0.0;
  double mean_sq_advantage = 0.0;
  double reward_loss = 0.0;   // NaN for the sampled source
  double warmup_weight = 0.0;
  bool diverged = false;
};

struct TrainResult {
  std::vector<CheckpointRecord> curve;
  bool diverged = false;
  Policy policy;
  Mlp critic;
  std::optional<ParametricRewardModel> reward_model;

  // Trailing-window return at the last checkpoint (NaN if none).
  double final_return() const;
};

TrainResult train_agent(const TrainConfig& config);

}  // namespace rewardlab
