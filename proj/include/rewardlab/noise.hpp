#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "rewardlab/env.hpp"
#include "rewardlab/random.hpp"

namespace rewardlab {

enum class NoiseKind { Gaussian, UniformReplace, Sparsify };

// Reward corruption channel. sigma is used by Gaussian only; epsilon by
// UniformReplace and Sparsify. Zero-strength channels are exact identities.
struct NoiseModel {
  NoiseKind kind = NoiseKind::Gaussian;
  double sigma = 0.0;
  double epsilon = 0.0;
  double low = -1.0;
  double high = 1.0;

  static NoiseModel identity() { return {}; }
  static NoiseModel gaussian(double sigma) { return {NoiseKind::Gaussian, sigma, 0.0}; }
  static NoiseModel uniform(double epsilon, double low = -1.0, double high = 1.0) {
    return {NoiseKind::UniformReplace, 0.0, epsilon, low, high};
  }
  static NoiseModel sparse(double epsilon) { return {NoiseKind::Sparsify, 0.0, epsilon}; }

  bool is_identity() const;
  // Strength parameter of the active channel (sigma or epsilon).
  double level() const;
  void validate() const;
  // Canonical text form, parseable by parse_noise: "gaussian:0.3" etc.
  std::string label() const;
};

double corrupt(const NoiseModel& model, double reward_true, Rng& rng);
double expected_corrupted(const NoiseModel& model, double true_mean);
double corrupted_variance(const NoiseModel& model, double true_mean, double true_var);

// Accepts "none", "gaussian:<sigma>", "uniform:<eps>", "sparse:<eps>"
// (aliases: "sparsify", "sparsity"). Throws std::invalid_argument.
NoiseModel parse_noise(std::string_view text);
NoiseKind parse_noise_kind(std::string_view text);
std::string noise_kind_name(NoiseKind kind);
NoiseModel with_level(NoiseModel model, double level);

// Wraps an environment and corrupts reward_observed with its own RNG
// stream, so toggling the channel never perturbs the trajectories.
class NoisyEnvironment final : public Environment {
 public:
  NoisyEnvironment(std::unique_ptr<Environment> inner, NoiseModel model, std::uint64_t noise_seed,
                   std::uint64_t stream = 0);
  NoisyEnvironment(const NoisyEnvironment& other);

  Vec reset(Rng& rng) override { return inner_->reset(rng); }
  Transition step(std::span<const double> action, Rng& rng) override;
  bool done() const override { return inner_->done(); }
  int observation_dim() const override { return inner_->observation_dim(); }
  ActionSpace action_space() const override { return inner_->action_space(); }
  std::string id() const override { return inner_->id(); }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<NoisyEnvironment>(*this);
  }

  const NoiseModel& model() const { return model_; }
  Environment& inner() { return *inner_; }

 private:
  std::unique_ptr<Environment> inner_;
  NoiseModel model_;
  Rng noise_rng_;
};

}  // namespace rewardlab
