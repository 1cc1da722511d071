#include "rewardlab/agents.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rewardlab/losses.hpp"
#include "rewardlab/random.hpp"

namespace rewardlab {

Algorithm parse_algorithm(std::string_view t) {
  if (t == "a2c") return Algorithm::A2C;
  if (t == "clipped" || t == "ppo") return Algorithm::ClippedPG;
  throw std::invalid_argument("unknown algorithm: " + std::string(t));
}

std::string algorithm_name(Algorithm a) { return a == Algorithm::A2C ? "a2c" : "clipped"; }

std::string RewardSource::label() const {
  return estimated ? "estimated:" + feature_mode_name(mode) : "sampled";
}

RewardSource parse_reward_source(std::string_view t) {
  if (t == "sampled") return RewardSource::sampled();
  constexpr std::string_view prefix = "estimated";
  if (t.substr(0, prefix.size()) == prefix) {
    if (t.size() == prefix.size()) return RewardSource::estimator(FeatureMode::S);
    if (t[prefix.size()] == ':') return RewardSource::estimator(parse_feature_mode(t.substr(prefix.size() + 1)));
  }
  throw std::invalid_argument("unknown reward source: " + std::string(t));
}

double WarmupSchedule::weight() const {
  if (total_warmup_updates <= 0) return 1.0;
  return std::clamp(static_cast<double>(current_update) / total_warmup_updates, 0.0, 1.0);
}

double effective_reward(const Transition& t, double rhat, const WarmupSchedule& schedule) {
  if (!std::isfinite(rhat)) throw std::invalid_argument("reward estimate must be finite");
  const double w = schedule.weight();
  if (w == 0.0) return t.reward_observed;
  if (w == 1.0) return rhat;
  return w * rhat + (1.0 - w) * t.reward_observed;
}

void AdvantageConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw std::invalid_argument("clip epsilon must lie in (0, 1)");
}

void RolloutBatch::validate(bool need_estimates) const {
  if (values.size() != transitions.size()) throw std::invalid_argument("values / transitions length mismatch");
  if (need_estimates && reward_estimates.size() != transitions.size())
    throw std::invalid_argument("reward estimates / transitions length mismatch");
}

Advantages gae_advantages(const RolloutBatch& b, const AdvantageConfig& cfg, const RewardSource& source,
                          const WarmupSchedule& schedule) {
  b.validate(source.estimated);
  const std::size_t n = b.transitions.size();
  Advantages out;
  out.advantages.assign(n, 0.0);
  out.value_targets.assign(n, 0.0);
  out.rewards.resize(n);
  double gae = 0.0;
  double lambda_return = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const Transition& t = b.transitions[k];
    const double r = source.estimated ? effective_reward(t, b.reward_estimates[k], schedule) : t.reward_observed;
    out.rewards[k] = r;
    double next_value = 0.0;
    if (!t.terminal) next_value = k + 1 < n ? b.values[k + 1] : b.bootstrap_value;
    if (t.terminal || k + 1 == n) {
      gae = 0.0;
      lambda_return = next_value;
    }
    const double delta = r + cfg.gamma * next_value - b.values[k];
    gae = delta + cfg.gamma * cfg.lambda * gae;
    // lambda-return recursion; identical to gae + V(s) and exact for lambda = 0.
    lambda_return = r + cfg.gamma * ((1.0 - cfg.lambda) * next_value + cfg.lambda * lambda_return);
    out.advantages[k] = gae;
    out.value_targets[k] = lambda_return;
  }
  return out;
}

void TrainConfig::validate() const {
  if (!is_known_preset(env)) throw std::invalid_argument("unknown environment preset: " + env);
  noise.validate();
  advantage.validate();
  if (updates < 1 || num_envs < 1 || rollout_length < 1)
    throw std::invalid_argument("updates, num_envs and rollout_length must be positive");
  if (epochs < 1 || minibatches < 1 || reward_steps < 1 || reward_batch < 1 || reward_buffer < 1)
    throw std::invalid_argument("epochs, minibatches and regressor sizes must be positive");
  if (minibatches > num_envs * rollout_length)
    throw std::invalid_argument("more minibatches than samples");
  if (!(policy_lr > 0 && critic_lr > 0 && reward_lr > 0)) throw std::invalid_argument("learning rates must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) throw std::invalid_argument("warmup fraction must lie in [0, 1]");
  if (trailing_window < 1 || checkpoint_every < 1) throw std::invalid_argument("window and checkpoint interval must be positive");
}

TrainConfig default_train_config(std::string_view env, Algorithm algo) {
  TrainConfig c;
  c.env = std::string(env);
  c.algo = algo;
  if (algo == Algorithm::A2C) {
    c.epochs = 1;
    c.minibatches = 1;
    c.entropy_coef = 0.01;
    c.normalize_advantages = false;
  }
  if (env == "grid5") {
    c.policy_lr = 1e-4;
    c.updates = 50;
  }
  return c;
}

double TrainResult::final_return() const {
  return curve.empty() ? std::numeric_limits<double>::quiet_NaN() : curve.back().mean_return;
}

namespace {

Matrix to_matrix(const std::vector<Vec>& cols) {
  Matrix m(static_cast<Eigen::Index>(cols.front().size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < cols[j].size(); ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
  return m;
}

Matrix select_columns(const Matrix& m, std::span<const int> idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

Vector select(const Vector& v, std::span<const int> idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out[static_cast<Eigen::Index>(j)] = v[idx[j]];
  return out;
}

void apply(Adam& opt, Vector params, Vector grad, double lr, double max_norm, auto&& set) {
  clip_gradient_norm(grad, max_norm);
  opt.step(params, grad, lr);
  set(params);
}

}  // namespace

TrainResult train_agent(const TrainConfig& cfg) {
  cfg.validate();
  const SeedSet seeds = derive_seeds(cfg.seed, cfg.cell_index);
  const auto proto = make_environment(cfg.env, cfg.env_options);
  const int obs_dim = proto->observation_dim();
  const ActionSpace space = proto->action_space();

  Rng init_rng = make_rng(seeds.init, 0);
  Rng action_rng = make_rng(seeds.init, 1);
  Rng shuffle_rng = make_rng(seeds.init, 2);

  TrainResult result;
  result.policy = Policy::create(obs_dim, space, cfg.hidden, init_rng);
  std::vector<int> critic_sizes{obs_dim};
  critic_sizes.insert(critic_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  critic_sizes.push_back(1);
  result.critic = Mlp::orthogonal(critic_sizes, 1.0, 1.0, init_rng);
  if (cfg.source.estimated) {
    std::vector<int> sizes = critic_sizes;
    sizes.front() = feature_dim(cfg.source.mode, obs_dim, space);
    result.reward_model.emplace(Mlp::orthogonal(sizes, 1.0, 1.0, init_rng), cfg.source.mode, space);
  }

  Adam policy_opt(result.policy.parameter_count());
  Adam critic_opt(result.critic.parameter_count());
  Adam reward_opt(result.reward_model ? result.reward_model->net().parameter_count() : 0);

  std::vector<NoisyEnvironment> envs;
  std::vector<Rng> env_rngs;
  std::vector<Vec> obs;
  std::vector<double> running_return(static_cast<std::size_t>(cfg.num_envs), 0.0);
  for (int k = 0; k < cfg.num_envs; ++k) {
    envs.emplace_back(proto->clone(), cfg.noise, seeds.noise, static_cast<std::uint64_t>(k));
    env_rngs.push_back(make_rng(seeds.env, static_cast<std::uint64_t>(k)));
    obs.push_back(envs.back().reset(env_rngs.back()));
  }

  // Regressor replay: feature columns and observed rewards, overwritten oldest first once full.
  Matrix buffer_x;
  Vector buffer_y;
  Eigen::Index buffer_next = 0;
  Eigen::Index buffer_size = 0;

  std::deque<double> window;
  int episodes = 0;
  WarmupSchedule schedule{static_cast<int>(std::lround(cfg.warmup_fraction * cfg.updates)), 0};
  const auto n_envs = static_cast<std::size_t>(cfg.num_envs);
  const auto horizon = static_cast<std::size_t>(cfg.rollout_length);
  const std::size_t n_samples = n_envs * horizon;

  for (int u = 0; u < cfg.updates; ++u) {
    schedule.current_update = u;
    CheckpointRecord rec;
    rec.update = u + 1;
    rec.warmup_weight = cfg.source.estimated ? schedule.weight() : 0.0;
    rec.reward_loss = std::numeric_limits<double>::quiet_NaN();
    try {
      // Collect, laid out env-major: sample index = k * horizon + t.
      std::vector<RolloutBatch> batches(n_envs);
      std::vector<Vec> batch_obs(n_samples), batch_actions(n_samples);
      Vector old_log_probs(static_cast<Eigen::Index>(n_samples));
      for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t k = 0; k < n_envs; ++k) {
          const std::size_t i = k * horizon + t;
          const auto sample = result.policy.act(obs[k], action_rng);
          Transition tr = envs[k].step(sample.action, env_rngs[k]);
          batch_obs[i] = obs[k];
          batch_actions[i] = sample.action;
          old_log_probs[static_cast<Eigen::Index>(i)] = sample.log_prob;
          running_return[k] += tr.reward_true;
          if (tr.terminal) {
            window.push_back(running_return[k]);
            if (static_cast<int>(window.size()) > cfg.trailing_window) window.pop_front();
            ++episodes;
            running_return[k] = 0.0;
            obs[k] = envs[k].reset(env_rngs[k]);
          } else {
            obs[k] = tr.next_state;
          }
          batches[k].transitions.push_back(std::move(tr));
        }
      }

      const Matrix obs_m = to_matrix(batch_obs);
      const Matrix act_m = to_matrix(batch_actions);
      const Matrix values = result.critic.forward(obs_m);
      const Matrix bootstrap = result.critic.forward(to_matrix(obs));
      std::vector<Transition> flat;
      flat.reserve(n_samples);
      for (auto& b : batches)
        for (auto& tr : b.transitions) flat.push_back(tr);
      Matrix rhat;
      if (result.reward_model) {
        auto& net = result.reward_model->net();
        const Matrix features = feature_matrix(cfg.source.mode, flat, space);
        if (buffer_x.cols() == 0) {
          buffer_x.resize(features.rows(), cfg.reward_buffer);
          buffer_y.resize(cfg.reward_buffer);
        }
        for (std::size_t i = 0; i < n_samples; ++i) {
          buffer_x.col(buffer_next) = features.col(static_cast<Eigen::Index>(i));
          buffer_y[buffer_next] = flat[i].reward_observed;
          buffer_next = (buffer_next + 1) % cfg.reward_buffer;
          buffer_size = std::min<Eigen::Index>(buffer_size + 1, cfg.reward_buffer);
        }
        std::uniform_int_distribution<int> pick(0, static_cast<int>(buffer_size) - 1);
        std::vector<int> idx(static_cast<std::size_t>(cfg.reward_batch));
        double loss_sum = 0.0;
        for (int step = 0; step < cfg.reward_steps; ++step) {
          for (auto& j : idx) j = pick(shuffle_rng);
          const LossGrad lg = squared_error_loss(net, select_columns(buffer_x, idx), select(buffer_y, idx));
          loss_sum += lg.loss;
          apply(reward_opt, net.parameters(), lg.grad, cfg.reward_lr, cfg.max_grad_norm,
                [&](const Vector& p) { net.set_parameters(p); });
        }
        result.reward_model->mark_fitted();
        rec.reward_loss = loss_sum / cfg.reward_steps;
        rhat = net.forward(features);
      }

      Vector advantages(static_cast<Eigen::Index>(n_samples)), targets(static_cast<Eigen::Index>(n_samples));
      for (std::size_t k = 0; k < n_envs; ++k) {
        RolloutBatch& b = batches[k];
        b.values.resize(horizon);
        if (result.reward_model) b.reward_estimates.resize(horizon);
        for (std::size_t t = 0; t < horizon; ++t) {
          const auto i = static_cast<Eigen::Index>(k * horizon + t);
          b.values[t] = values(0, i);
          if (result.reward_model) b.reward_estimates[t] = rhat(0, i);
        }
        // The final step's successor is the env's current state unless the
        // episode just ended (reset already happened; GAE ignores it).
        b.bootstrap_value = bootstrap(0, static_cast<Eigen::Index>(k));
        const Advantages adv = gae_advantages(b, cfg.advantage, cfg.source, schedule);
        for (std::size_t t = 0; t < horizon; ++t) {
          const auto i = static_cast<Eigen::Index>(k * horizon + t);
          advantages[i] = adv.advantages[t];
          targets[i] = adv.value_targets[t];
        }
      }
      rec.mean_abs_advantage = advantages.cwiseAbs().mean();
      rec.mean_sq_advantage = advantages.squaredNorm() / static_cast<double>(n_samples);

      Vector policy_adv = advantages;
      if (cfg.normalize_advantages && n_samples > 1) {
        const double mean = policy_adv.mean();
        const double sd = std::sqrt((policy_adv.array() - mean).square().sum() / static_cast<double>(n_samples - 1));
        policy_adv = (policy_adv.array() - mean) / (sd + 1e-8);
      }
      std::vector<int> order(n_samples);
      std::iota(order.begin(), order.end(), 0);
      const std::size_t mb_size = n_samples / static_cast<std::size_t>(cfg.minibatches);
      for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.minibatches > 1) std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (int mb = 0; mb < cfg.minibatches; ++mb) {
          const std::size_t begin = static_cast<std::size_t>(mb) * mb_size;
          const std::size_t end = mb + 1 == cfg.minibatches ? n_samples : begin + mb_size;
          const std::span<const int> idx(order.data() + begin, end - begin);
          const Matrix o = select_columns(obs_m, idx);

          const LossGrad vl = critic_loss(result.critic, o, select(targets, idx));
          apply(critic_opt, result.critic.parameters(), vl.grad, cfg.critic_lr, cfg.max_grad_norm,
                [&](const Vector& p) { result.critic.set_parameters(p); });

          const Matrix a = select_columns(act_m, idx);
          const LossGrad pl =
              cfg.algo == Algorithm::A2C
                  ? a2c_actor_loss(result.policy, o, a, select(policy_adv, idx), cfg.entropy_coef)
                  : clipped_surrogate_loss(result.policy, o, a, select(old_log_probs, idx),
                                           select(policy_adv, idx), cfg.advantage.clip_epsilon,
                                           cfg.entropy_coef);
          apply(policy_opt, result.policy.parameters(), pl.grad, cfg.policy_lr, cfg.max_grad_norm,
                [&](const Vector& p) { result.policy.set_parameters(p); });
        }
      }
      const bool finite = result.policy.parameters().allFinite() && result.critic.parameters().allFinite() &&
                          (!result.reward_model || result.reward_model->net().parameters().allFinite());
      if (!finite) throw NumericalError("non-finite parameters after update", -1);
    } catch (const NumericalError&) {
      rec.diverged = true;
    }

    rec.episodes = episodes;
    rec.window_full = static_cast<int>(window.size()) >= cfg.trailing_window;
    rec.mean_return = window.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : std::accumulate(window.begin(), window.end(), 0.0) /
                                           static_cast<double>(window.size());
    if (rec.diverged) {
      result.diverged = true;
      result.curve.push_back(rec);
      break;
    }
    if (rec.update % cfg.checkpoint_every == 0 || rec.update == cfg.updates) result.curve.push_back(rec);
  }
  return result;
}

}  // namespace rewardlab
