#include "rewardlab/policy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rewardlab {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}

Policy::Policy(Mlp net, ActionSpace space) : net_(std::move(net)), space_(space) {
  if (net_.output_dim() != space_.size) throw std::invalid_argument("policy head width mismatch");
  log_std_ = space_.discrete() ? Vector() : Vector::Zero(space_.size);
}

Policy Policy::create(int obs_dim, const ActionSpace& space, const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(space.size);
  return Policy(Mlp::orthogonal(sizes, 1.0, 0.01, rng), space);
}

Vector Policy::parameters() const {
  Vector p(parameter_count());
  p << net_.parameters(), log_std_;
  return p;
}

void Policy::set_parameters(const Vector& p) {
  if (p.size() != parameter_count()) throw std::invalid_argument("policy parameter length mismatch");
  net_.set_parameters(p.head(net_.parameter_count()));
  log_std_ = p.tail(log_std_.size());
}

Policy::Sample Policy::act(const Vec& observation, Rng& rng) const {
  const Vector x = Eigen::Map<const Vector>(observation.data(), static_cast<Eigen::Index>(observation.size()));
  const Vector out = net_.forward(x);
  Sample s;
  if (space_.discrete()) {
    const double mx = out.maxCoeff();
    const Vector e = (out.array() - mx).exp();
    const double z = e.sum();
    std::discrete_distribution<int> pick(e.data(), e.data() + e.size());
    const int a = pick(rng);
    s.action = {static_cast<double>(a)};
    s.log_prob = out[a] - mx - std::log(z);
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    s.action.resize(static_cast<std::size_t>(space_.size));
    for (int j = 0; j < space_.size; ++j) {
      const double sd = std::exp(log_std_[j]);
      const double noise = normal(rng);
      s.action[static_cast<std::size_t>(j)] = out[j] + sd * noise;
      s.log_prob += -0.5 * noise * noise - log_std_[j] - 0.5 * kLog2Pi;
    }
  }
  return s;
}

Policy::Evaluation Policy::evaluate(const Matrix& obs, const Matrix& actions) const {
  Evaluation ev;
  const Matrix out = net_.forward(obs, ev.tape);
  const Eigen::Index n = obs.cols();
  if (actions.cols() != n) throw std::invalid_argument("actions and observations differ in count");
  ev.log_probs.resize(n);
  ev.entropies.resize(n);
  if (space_.discrete()) {
    if (actions.rows() != 1) throw std::invalid_argument("discrete actions must be one row");
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto z = out.col(i);
      const double mx = z.maxCoeff();
      const Vector e = (z.array() - mx).exp();
      const double lse = mx + std::log(e.sum());
      const Vector logp = z.array() - lse;
      const auto a = static_cast<Eigen::Index>(actions(0, i));
      if (a < 0 || a >= z.size()) throw std::out_of_range("action index out of range");
      ev.log_probs[i] = logp[a];
      ev.entropies[i] = -(logp.array().exp() * logp.array()).sum();
    }
  } else {
    if (actions.rows() != space_.size) throw std::invalid_argument("action dimension mismatch");
    const Vector inv_var = (-2.0 * log_std_.array()).exp();
    const double entropy = (log_std_.array() + 0.5 * (kLog2Pi + 1.0)).sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector d = actions.col(i) - out.col(i);
      ev.log_probs[i] =
          (-0.5 * d.array().square() * inv_var.array() - log_std_.array() - 0.5 * kLog2Pi).sum();
      ev.entropies[i] = entropy;
    }
  }
  if (!ev.log_probs.allFinite()) throw NumericalError("non-finite log-probability", net_.num_layers());
  return ev;
}

Vector Policy::backward(const Evaluation& ev, const Matrix& actions, const Vector& dlogp,
                        const Vector& dent) const {
  const Matrix& out = ev.tape.activations.back();
  const Eigen::Index n = out.cols();
  Matrix grad_out(out.rows(), n);
  Vector grad_log_std = Vector::Zero(log_std_.size());
  if (space_.discrete()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto z = out.col(i);
      const double mx = z.maxCoeff();
      const Vector e = (z.array() - mx).exp();
      const Vector p = e / e.sum();
      const Vector logp = p.array().log();
      const double h = ev.entropies[i];
      // d logp_a / dz = onehot(a) - p ;  dH / dz_k = -p_k (log p_k + H)
      Vector g = -dlogp[i] * p;
      g[static_cast<Eigen::Index>(actions(0, i))] += dlogp[i];
      g.array() += dent[i] * (-p.array() * (logp.array() + h));
      grad_out.col(i) = g;
    }
  } else {
    const Vector inv_var = (-2.0 * log_std_.array()).exp();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector d = actions.col(i) - out.col(i);
      grad_out.col(i) = dlogp[i] * d.cwiseProduct(inv_var);
      grad_log_std.array() += dlogp[i] * (d.array().square() * inv_var.array() - 1.0) + dent[i];
    }
  }
  Vector g(parameter_count());
  g << net_.backward(ev.tape, grad_out), grad_log_std;
  return g;
}

}  // namespace rewardlab
