#pragma once

#include <vector>

#include "rewardlab/env.hpp"
#include "rewardlab/nn.hpp"

namespace rewardlab {

// Stochastic policy head: softmax over logits for discrete spaces, diagonal
// Gaussian with a state-independent learnable log-std for continuous ones.
// The flat parameter vector is the network's parameters followed by log-std.
class Policy {
 public:
  Policy() = default;
  Policy(Mlp net, ActionSpace space);

  // Orthogonal init, output gain 0.01, log-std 0.
  static Policy create(int obs_dim, const ActionSpace& space, const std::vector<int>& hidden,
                       Rng& rng);

  const ActionSpace& space() const { return space_; }
  const Mlp& net() const { return net_; }
  const Vector& log_std() const { return log_std_; }

  Eigen::Index parameter_count() const { return net_.parameter_count() + log_std_.size(); }
  Vector parameters() const;
  void set_parameters(const Vector& p);

  struct Sample {
    Vec action;
    double log_prob = 0.0;
  };
  Sample act(const Vec& observation, Rng& rng) const;

  // Action matrix layout: one column per sample; discrete actions are a
  // single row of indices.
  struct Evaluation {
    Mlp::Tape tape;
    Vector log_probs;
    Vector entropies;
  };
  Evaluation evaluate(const Matrix& observations, const Matrix& actions) const;

  // Parameter gradient of sum_i (dlogp_i * logp_i + dent_i * H_i).
  Vector backward(const Evaluation& eval, const Matrix& actions, const Vector& dlogp,
                  const Vector& dentropy) const;

 private:
  Mlp net_;
  ActionSpace space_;
  Vector log_std_;
};

}  // namespace rewardlab
