#include "rewardlab/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rewardlab {

void ActionSpace::encode(std::span<const double> action, std::span<double> out) const {
  if (static_cast<int>(out.size()) != feature_dim())
    throw std::invalid_argument("action encoding: output width mismatch");
  if (discrete()) {
    if (action.size() != 1) throw std::invalid_argument("discrete action must be a single index");
    const auto index = static_cast<int>(action[0]);
    if (index < 0 || index >= size) throw std::out_of_range("discrete action out of range");
    std::fill(out.begin(), out.end(), 0.0);
    out[static_cast<std::size_t>(index)] = 1.0;
  } else {
    if (static_cast<int>(action.size()) != size)
      throw std::invalid_argument("continuous action dimension mismatch");
    std::transform(action.begin(), action.end(), out.begin(), [](double a) { return std::clamp(a, -1.0, 1.0); });
  }
}

Vec ActionSpace::sample_uniform(Rng& rng) const {
  if (discrete()) {
    std::uniform_int_distribution<int> pick(0, size - 1);
    return {static_cast<double>(pick(rng))};
  }
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec a(static_cast<std::size_t>(size));
  for (auto& x : a) x = u(rng);
  return a;
}

ChainMdp build_chain(int num_reward_steps, double reward_value, double reward_prob,
                     double gamma) {
  if (num_reward_steps < 1) throw std::invalid_argument("chain needs at least one reward step");
  if (!(reward_prob >= 0.0 && reward_prob <= 1.0))
    throw std::invalid_argument("reward probability must lie in [0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!std::isfinite(reward_value)) throw std::invalid_argument("reward value must be finite");
  return ChainMdp{num_reward_steps, reward_value, reward_prob, gamma};
}

std::vector<double> true_values(const ChainMdp& chain) {
  const double per_step = chain.reward_prob * chain.reward_value;
  std::vector<double> v(static_cast<std::size_t>(chain.num_states()), 0.0);
  for (int s = chain.num_reward_steps - 1; s >= 0; --s)
    v[static_cast<std::size_t>(s)] = per_step + chain.gamma * v[static_cast<std::size_t>(s + 1)];
  return v;
}

Vec ChainEnv::reset(Rng&) {
  state_ = 0;
  return {0.0};
}

Transition ChainEnv::step(std::span<const double>, Rng& rng) {
  if (done()) throw std::logic_error("step() called on a terminal chain");
  std::bernoulli_distribution pays(chain_.reward_prob);
  Transition t;
  t.state = {static_cast<double>(state_)};
  t.action = {0.0};
  t.reward_true = pays(rng) ? chain_.reward_value : 0.0;
  t.reward_observed = t.reward_true;
  ++state_;
  t.next_state = {static_cast<double>(state_)};
  t.terminal = done();
  return t;
}

std::string ChainEnv::id() const { return "chain" + std::to_string(chain_.num_reward_steps); }

GridWorld::GridWorld(int size, int max_steps) : size_(size), max_steps_(max_steps) {
  if (size < 2) throw std::invalid_argument("grid size must be at least 2");
  if (max_steps < 1) throw std::invalid_argument("grid episode cap must be positive");
}

Vec GridWorld::observe() const {
  Vec obs(static_cast<std::size_t>(size_ * size_), 0.0);
  obs[static_cast<std::size_t>(row_ * size_ + col_)] = 1.0;
  return obs;
}

Vec GridWorld::reset(Rng&) {
  row_ = col_ = steps_ = 0;
  return observe();
}

bool GridWorld::done() const {
  return (row_ == size_ - 1 && col_ == size_ - 1) || steps_ >= max_steps_;
}

Transition GridWorld::step(std::span<const double> action, Rng&) {
  if (done()) throw std::logic_error("step() called on a finished gridworld episode");
  if (action.size() != 1) throw std::invalid_argument("gridworld action must be one index");
  const int a = static_cast<int>(action[0]);
  Transition t;
  t.state = observe();
  t.action = {static_cast<double>(a)};
  switch (a) {
    case 0: row_ = std::max(row_ - 1, 0); break;          // up
    case 1: col_ = std::min(col_ + 1, size_ - 1); break;  // right
    case 2: row_ = std::min(row_ + 1, size_ - 1); break;  // down
    case 3: col_ = std::max(col_ - 1, 0); break;          // left
    default: throw std::out_of_range("gridworld action must be in [0, 4)");
  }
  ++steps_;
  const bool at_goal = row_ == size_ - 1 && col_ == size_ - 1;
  t.reward_true = at_goal ? 1.0 : 0.0;
  t.reward_observed = t.reward_true;
  t.next_state = observe();
  t.terminal = done();
  return t;
}

PointMassEnv::PointMassEnv(double action_cost_coeff, int horizon)
    : action_cost_coeff_(action_cost_coeff), horizon_(horizon) {
  if (action_cost_coeff < 0.0) throw std::invalid_argument("action cost must be nonnegative");
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
}

Vec PointMassEnv::observe() const {
  return {position_, 1.0 - static_cast<double>(steps_) / horizon_};
}

Vec PointMassEnv::reset(Rng& rng) {
  std::uniform_real_distribution<double> start(-1.0, 1.0);
  position_ = start(rng);
  velocity_ = 0.0;
  steps_ = 0;
  return observe();
}

Transition PointMassEnv::step(std::span<const double> action, Rng&) {
  if (done()) throw std::logic_error("step() called past the point-mass horizon");
  if (action.size() != 1) throw std::invalid_argument("point-mass action must be scalar");
  const double a = std::clamp(action[0], -1.0, 1.0);
  Transition t;
  t.state = observe();
  t.action = {action[0]};
  t.reward_true = -position_ * position_ - action_cost_coeff_ * a * a;
  t.reward_observed = t.reward_true;
  velocity_ = 0.1 * a;
  position_ += velocity_;
  ++steps_;
  t.next_state = observe();
  t.terminal = done();
  return t;
}

bool is_known_preset(std::string_view id) {
  return id == "chain5" || id == "chain10" || id == "grid5" || id == "pointmass";
}

std::unique_ptr<Environment> make_environment(std::string_view id, const EnvOptions& o) {
  if (id == "chain5" || id == "chain10") {
    const int steps = id == "chain5" ? 5 : 10;
    return std::make_unique<ChainEnv>(build_chain(steps, o.chain_reward, o.chain_prob, o.chain_gamma));
  }
  if (id == "grid5") return std::make_unique<GridWorld>(5, o.grid_max_steps);
  if (id == "pointmass") return std::make_unique<PointMassEnv>(o.action_cost, 50);
  throw std::invalid_argument("unknown environment preset: " + std::string(id));
}

}  // namespace rewardlab
