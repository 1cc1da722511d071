#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rewardlab/env.hpp"
#include "rewardlab/noise.hpp"
#include "rewardlab/random.hpp"
#include "rewardlab/reward_model.hpp"

namespace rewardlab {

// One Bellman-target sample: reward and the already discounted next value.
struct TargetSample {
  double reward = 0.0;
  double next_value = 0.0;  // gamma * V(s')
};

struct VarianceDecomposition {
  double var_reward = 0.0;
  double var_next_value = 0.0;
  double cov_reward_value = 0.0;
  double var_target = 0.0;           // measured directly on r + gamma V'
  double var_target_identity = 0.0;  // var_r + var_v + 2 cov
  std::size_t samples = 0;
};

// Unbiased sample moments. Throws std::invalid_argument for < 2 samples.
VarianceDecomposition decompose_target_variance(std::span<const TargetSample> samples);

// Scalar reward law: value * Bernoulli(p) or Normal(mean, sd).
struct RewardLaw {
  enum class Kind { ScaledBernoulli, Gaussian };
  Kind kind = Kind::ScaledBernoulli;
  double p = 0.5;
  double value = 1.0;
  double mu = 0.0;
  double sd = 1.0;

  static RewardLaw bernoulli(double p, double value) { return {Kind::ScaledBernoulli, p, value}; }
  static RewardLaw gaussian(double mu, double sd) { return {Kind::Gaussian, 0.0, 0.0, mu, sd}; }

  double sample(Rng& rng) const;
  double mean() const;
  double variance() const;
};

struct SampleMeanCheck {
  int n = 1;
  double ratio = 0.0;     // var[mean of N draws] / var[single draw]
  double expected = 0.0;  // 1 / N
  double relative_error() const { return (ratio - expected) / expected; }
  bool within(double rel_tol) const;
};

SampleMeanCheck verify_sample_mean_variance(const RewardLaw& law, int n, std::size_t trials,
                                            Rng& rng);

// Joint law of (r, gamma V'): r ~ reward, gamma V' = coupling * r + N(0, value_noise^2).
// The sample-mean estimator averages the measured r with N-1 further i.i.d.
// replays of the same transition, which are independent of V'.
struct CoupledLaw {
  RewardLaw reward = RewardLaw::bernoulli(0.5, 1.0);
  double coupling = 0.0;
  double value_noise = 1.0;

  TargetSample sample(Rng& rng) const;
  double var_reward() const { return reward.variance(); }
  double cov_reward_value() const { return coupling * reward.variance(); }
  double var_next_value() const {
    return coupling * coupling * reward.variance() + value_noise * value_noise;
  }
};

struct CovScalingCheck {
  int n = 1;
  double cov_single = 0.0;  // cov[r, gamma V']
  double cov_mean = 0.0;    // cov[R̂_N, gamma V']
  double ratio() const { return cov_mean / cov_single; }
  double expected() const { return 1.0 / n; }
};

CovScalingCheck verify_cov_scaling(const CoupledLaw& law, int n, std::size_t trials, Rng& rng);

// Predicted difference var[Ĝ] - var[G] = (1/N - 1) var[r] + (2/N - 2) cov[r, gamma V'].
double predicted_variance_gap(double var_reward, double cov_reward_value, int n);

struct GapReport {
  double measured_gap = 0.0;   // var[Ĝ] - var[G]
  double predicted_gap = 0.0;  // from the sampled decomposition's moments
  double standard_error = 0.0;
  bool identity_holds = false;        // |measured - predicted| <= 3 SE
  bool covariance_condition = false;  // var[r] > -2 cov[r, gamma V']
  bool estimator_no_worse = false;    // measured gap <= 0
};

GapReport variance_gap(const VarianceDecomposition& sampled, const VarianceDecomposition& estimated,
                       int n, double standard_error);

struct GapExperiment {
  VarianceDecomposition sampled;
  VarianceDecomposition estimated;
  GapReport report;
  double analytic_gap = 0.0;  // from the law's exact moments
};

// Draws `trials` paired targets (G, Ĝ) and estimates the gap's standard
// error from `batches` equal batches.
GapExperiment run_gap_experiment(const CoupledLaw& law, int n, std::size_t trials,
                                 std::size_t batches, Rng& rng);

struct RewardStatistics {
  double var_true = 0.0;
  double var_corrupted = 0.0;
  double var_estimated = 0.0;
  double mse_corrupted = 0.0;  // MSE(R_corr, R_true)
  double mse_estimated = 0.0;  // MSE(R̂, R_true)
  std::size_t transitions = 0;
};

using ActionSampler = std::function<Vec(const Vec& observation, Rng& rng)>;

// Rolls out a frozen policy for `episodes` episodes per trial and measures
// the reward columns over every visited transition. Throws
// std::invalid_argument if the estimator was never fitted.
std::vector<RewardStatistics> measure_reward_statistics(const Environment& env,
                                                        const NoiseModel& noise,
                                                        const ActionSampler& policy,
                                                        const RewardModel& estimator,
                                                        int episodes, int trials,
                                                        std::uint64_t seed);

RewardStatistics average(std::span<const RewardStatistics> per_trial);

}  // namespace rewardlab
