#include "rewardlab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rewardlab {

LossGrad grad(const Mlp& net, const Matrix& inputs, const OutputLoss& loss) {
  if (inputs.cols() == 0) throw std::invalid_argument("gradient needs a nonempty batch");
  Mlp::Tape tape;
  const Matrix out = net.forward(inputs, tape);
  Matrix grad_out = Matrix::Zero(out.rows(), out.cols());
  const double value = loss(out, grad_out);
  if (!std::isfinite(value)) throw NumericalError("non-finite loss", net.num_layers());
  return {value, net.backward(tape, grad_out)};
}

LossGrad squared_error_loss(const Mlp& net, const Matrix& inputs, const Vector& targets) {
  if (net.output_dim() != 1) throw std::invalid_argument("squared error needs a scalar head");
  if (targets.size() != inputs.cols()) throw std::invalid_argument("targets and inputs differ in count");
  return grad(net, inputs, [&](const Matrix& out, Matrix& g) {
    const Eigen::RowVectorXd diff = out.row(0) - targets.transpose();
    const double n = static_cast<double>(diff.size());
    g.row(0) = (2.0 / n) * diff;
    return diff.squaredNorm() / n;
  });
}

LossGrad reward_regression_loss(const Mlp& net, std::span<const Transition> batch, FeatureMode mode,
                                const ActionSpace& space) {
  const Matrix x = feature_matrix(mode, batch, space);
  Vector y(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) y[static_cast<Eigen::Index>(i)] = batch[i].reward_observed;
  return squared_error_loss(net, x, y);
}

LossGrad critic_loss(const Mlp& critic, const Matrix& observations, const Vector& targets) {
  return squared_error_loss(critic, observations, targets);
}

LossGrad a2c_actor_loss(const Policy& policy, const Matrix& obs, const Matrix& actions,
                        const Vector& adv, double entropy_coef) {
  if (adv.size() != obs.cols()) throw std::invalid_argument("advantages and batch differ in count");
  const auto ev = policy.evaluate(obs, actions);
  const double n = static_cast<double>(adv.size());
  LossGrad out;
  out.loss = -(ev.log_probs.array() * adv.array()).sum() / n - entropy_coef * ev.entropies.mean();
  const Vector dlogp = -adv / n;
  const Vector dent = Vector::Constant(adv.size(), -entropy_coef / n);
  out.grad = policy.backward(ev, actions, dlogp, dent);
  return out;
}

LossGrad clipped_surrogate_loss(const Policy& policy, const Matrix& obs, const Matrix& actions,
                                const Vector& old_log_probs, const Vector& adv, double clip_epsilon,
                                double entropy_coef) {
  if (adv.size() != obs.cols() || old_log_probs.size() != obs.cols())
    throw std::invalid_argument("advantages / old log-probs and batch differ in count");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw std::invalid_argument("clip epsilon must lie in (0, 1)");
  const auto ev = policy.evaluate(obs, actions);
  const double n = static_cast<double>(adv.size());
  Vector dlogp(adv.size());
  double objective = 0.0;
  for (Eigen::Index i = 0; i < adv.size(); ++i) {
    const double rho = std::exp(ev.log_probs[i] - old_log_probs[i]);
    const double unclipped = rho * adv[i];
    const double clipped = std::clamp(rho, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * adv[i];
    if (unclipped <= clipped) {
      objective += unclipped;
      dlogp[i] = -unclipped / n;  // d(rho)/d(logp) = rho
    } else {
      objective += clipped;
      dlogp[i] = 0.0;
    }
  }
  LossGrad out;
  out.loss = -objective / n - entropy_coef * ev.entropies.mean();
  const Vector dent = Vector::Constant(adv.size(), -entropy_coef / n);
  out.grad = policy.backward(ev, actions, dlogp, dent);
  return out;
}

}  // namespace rewardlab
