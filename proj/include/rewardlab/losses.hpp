#pragma once

#include <functional>
#include <span>

#include "rewardlab/features.hpp"
#include "rewardlab/nn.hpp"
#include "rewardlab/policy.hpp"

namespace rewardlab {

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

// Scalar loss of a network output batch; writes dL/d(output) into grad_out.
using OutputLoss = std::function<double(const Matrix& output, Matrix& grad_out)>;

// Backpropagates an arbitrary output loss. Throws std::invalid_argument for
// an empty batch and NumericalError (with layer index) on non-finite values.
LossGrad grad(const Mlp& net, const Matrix& inputs, const OutputLoss& loss);

// mean((net(x_i) - y_i)^2)
LossGrad squared_error_loss(const Mlp& net, const Matrix& inputs, const Vector& targets);

// Reward regression against reward_observed (never reward_true).
LossGrad reward_regression_loss(const Mlp& net, std::span<const Transition> batch, FeatureMode mode,
                                const ActionSpace& space);

// mean((V(s_i) - target_i)^2); targets are constants.
LossGrad critic_loss(const Mlp& critic, const Matrix& observations, const Vector& targets);

// mean(-log pi(a_i|s_i) A_i) - entropy_coef * mean(H_i); advantages are constants.
LossGrad a2c_actor_loss(const Policy& policy, const Matrix& observations, const Matrix& actions,
                        const Vector& advantages, double entropy_coef = 0.01);

// mean(-min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i)) - entropy_coef * mean(H_i)
LossGrad clipped_surrogate_loss(const Policy& policy, const Matrix& observations,
                                const Matrix& actions, const Vector& old_log_probs,
                                const Vector& advantages, double clip_epsilon,
                                double entropy_coef = 0.0);

}  // namespace rewardlab
