#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rewardlab/random.hpp"

namespace rewardlab {

using Vec = std::vector<double>;

// One environment step. Agents read reward_observed only; reward_true is
// carried for evaluation and diagnostics.
struct Transition {
  Vec state;
  Vec action;
  Vec next_state;
  double reward_true = 0.0;
  double reward_observed = 0.0;
  bool terminal = false;
};

struct ActionSpace {
  enum class Kind { Discrete, Continuous };
  Kind kind = Kind::Discrete;
  int size = 1;  // number of actions (discrete) or action dimension (continuous)

  bool discrete() const { return kind == Kind::Discrete; }
  // Width of the action's feature encoding: one-hot for discrete spaces,
  // the action clipped to [-1, 1] for continuous ones.
  int feature_dim() const { return size; }
  void encode(std::span<const double> action, std::span<double> out) const;
  Vec sample_uniform(Rng& rng) const;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual Vec reset(Rng& rng) = 0;
  // Throws std::logic_error when called on a finished episode.
  virtual Transition step(std::span<const double> action, Rng& rng) = 0;
  virtual bool done() const = 0;
  virtual int observation_dim() const = 0;
  virtual ActionSpace action_space() const = 0;
  virtual std::string id() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

// Left-to-right chain: num_reward_steps transitions, each paying
// reward_value with probability reward_prob, then a terminal state.
struct ChainMdp {
  int num_reward_steps = 5;
  double reward_value = 1.0;
  double reward_prob = 0.5;
  double gamma = 1.0;

  int num_states() const { return num_reward_steps + 1; }
  int terminal_state() const { return num_reward_steps; }
};

ChainMdp build_chain(int num_reward_steps, double reward_value, double reward_prob,
                     double gamma = 1.0);

// Exact expected discounted return from every state (terminal = 0).
std::vector<double> true_values(const ChainMdp& chain);

class ChainEnv final : public Environment {
 public:
  explicit ChainEnv(ChainMdp chain) : chain_(chain) {}

  Vec reset(Rng& rng) override;
  Transition step(std::span<const double> action, Rng& rng) override;
  bool done() const override { return state_ == chain_.terminal_state(); }
  int observation_dim() const override { return 1; }
  ActionSpace action_space() const override { return {ActionSpace::Kind::Discrete, 1}; }
  std::string id() const override;
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<ChainEnv>(*this);
  }

  const ChainMdp& chain() const { return chain_; }
  int state() const { return state_; }

 private:
  ChainMdp chain_;
  int state_ = 0;
};

// 5x5 grid, start at (0,0), +1 on entering the goal at (size-1, size-1).
// Observation is a one-hot cell encoding. Episodes end at the goal or after
// max_steps moves.
class GridWorld final : public Environment {
 public:
  explicit GridWorld(int size = 5, int max_steps = 50);

  Vec reset(Rng& rng) override;
  Transition step(std::span<const double> action, Rng& rng) override;
  bool done() const override;
  int observation_dim() const override { return size_ * size_; }
  ActionSpace action_space() const override { return {ActionSpace::Kind::Discrete, 4}; }
  std::string id() const override { return "grid5"; }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<GridWorld>(*this);
  }

  int row() const { return row_; }
  int col() const { return col_; }
  int max_steps() const { return max_steps_; }

 private:
  Vec observe() const;

  int size_;
  int max_steps_;
  int row_ = 0;
  int col_ = 0;
  int steps_ = 0;
};

// 1-D point mass: x' = x + 0.1 * clip(a, -1, 1),
// reward = -x^2 - action_cost_coeff * clip(a)^2 on the departed position.
// Observation: (x, fraction of horizon remaining).
class PointMassEnv final : public Environment {
 public:
  explicit PointMassEnv(double action_cost_coeff = 0.5, int horizon = 50);

  Vec reset(Rng& rng) override;
  Transition step(std::span<const double> action, Rng& rng) override;
  bool done() const override { return steps_ >= horizon_; }
  int observation_dim() const override { return 2; }
  ActionSpace action_space() const override { return {ActionSpace::Kind::Continuous, 1}; }
  std::string id() const override { return "pointmass"; }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<PointMassEnv>(*this);
  }

  void set_position(double x) { position_ = x; }
  double position() const { return position_; }
  double velocity() const { return velocity_; }
  double action_cost_coeff() const { return action_cost_coeff_; }

 private:
  Vec observe() const;

  double position_ = 0.0;
  double velocity_ = 0.0;
  double action_cost_coeff_;
  int horizon_;
  int steps_ = 0;
};

struct EnvOptions {
  double chain_reward = 1.0;
  double chain_prob = 0.5;
  double chain_gamma = 1.0;
  double action_cost = 0.5;
  int grid_max_steps = 50;
};

// Presets: chain5, chain10, grid5, pointmass. Throws std::invalid_argument
// for unknown ids.
std::unique_ptr<Environment> make_environment(std::string_view id,
                                              const EnvOptions& options = {});
bool is_known_preset(std::string_view id);

}  // namespace rewardlab
