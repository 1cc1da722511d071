#include "rewardlab/variance.hpp"

#include <cmath>
#include <stdexcept>

#include "rewardlab/stats.hpp"

namespace rewardlab {

VarianceDecomposition decompose_target_variance(std::span<const TargetSample> samples) {
  if (samples.size() < 2) throw std::invalid_argument("variance decomposition needs >= 2 samples");
  std::vector<double> r, v, g;
  r.reserve(samples.size());
  v.reserve(samples.size());
  g.reserve(samples.size());
  for (const auto& s : samples) {
    r.push_back(s.reward);
    v.push_back(s.next_value);
    g.push_back(s.reward + s.next_value);
  }
  VarianceDecomposition d;
  d.var_reward = stats::variance(r);
  d.var_next_value = stats::variance(v);
  d.cov_reward_value = stats::covariance(r, v);
  d.var_target = stats::variance(g);
  d.var_target_identity = d.var_reward + d.var_next_value + 2.0 * d.cov_reward_value;
  d.samples = samples.size();
  return d;
}

double RewardLaw::sample(Rng& rng) const {
  if (kind == Kind::ScaledBernoulli) {
    std::bernoulli_distribution b(p);
    return b(rng) ? value : 0.0;
  }
  std::normal_distribution<double> n(mu, sd);
  return n(rng);
}

double RewardLaw::mean() const { return kind == Kind::ScaledBernoulli ? p * value : mu; }

double RewardLaw::variance() const {
  return kind == Kind::ScaledBernoulli ? p * (1.0 - p) * value * value : sd * sd;
}

bool SampleMeanCheck::within(double rel_tol) const {
  return std::abs(ratio - expected) <= rel_tol * expected;
}

SampleMeanCheck verify_sample_mean_variance(const RewardLaw& law, int n, std::size_t trials,
                                            Rng& rng) {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  if (trials < 2) throw std::invalid_argument("need at least 2 trials");
  stats::RunningMoments single, averaged;
  for (std::size_t t = 0; t < trials; ++t) {
    const double first = law.sample(rng);
    double sum = first;
    for (int i = 1; i < n; ++i) sum += law.sample(rng);
    single.push(first);
    averaged.push(sum / n);
  }
  return {n, averaged.variance() / single.variance(), 1.0 / n};
}

TargetSample CoupledLaw::sample(Rng& rng) const {
  const double r = reward.sample(rng);
  double v = coupling * r;
  if (value_noise > 0.0) {
    std::normal_distribution<double> xi(0.0, value_noise);
    v += xi(rng);
  }
  return {r, v};
}

namespace {

// (G sample, Ĝ sample) pair from one trial of the coupled law.
struct PairedTargets {
  TargetSample sampled;
  TargetSample estimated;
};

PairedTargets draw_paired(const CoupledLaw& law, int n, Rng& rng) {
  const TargetSample measured = law.sample(rng);
  double sum = measured.reward;
  for (int i = 1; i < n; ++i) sum += law.reward.sample(rng);
  return {measured, {sum / n, measured.next_value}};
}

}  // namespace

CovScalingCheck verify_cov_scaling(const CoupledLaw& law, int n, std::size_t trials, Rng& rng) {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  if (trials < 2) throw std::invalid_argument("need at least 2 trials");
  std::vector<double> r(trials), rhat(trials), v(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const PairedTargets p = draw_paired(law, n, rng);
    r[t] = p.sampled.reward;
    rhat[t] = p.estimated.reward;
    v[t] = p.sampled.next_value;
  }
  return {n, stats::covariance(r, v), stats::covariance(rhat, v)};
}

double predicted_variance_gap(double var_r, double cov_rv, int n) {
  const double inv = 1.0 / n;
  return (inv - 1.0) * var_r + (2.0 * inv - 2.0) * cov_rv;
}

GapReport variance_gap(const VarianceDecomposition& sampled, const VarianceDecomposition& estimated,
                       int n, double standard_error) {
  GapReport g;
  g.measured_gap = estimated.var_target - sampled.var_target;
  g.predicted_gap = predicted_variance_gap(sampled.var_reward, sampled.cov_reward_value, n);
  g.standard_error = standard_error;
  g.identity_holds = std::abs(g.measured_gap - g.predicted_gap) <= 3.0 * standard_error;
  g.covariance_condition = sampled.var_reward > -2.0 * sampled.cov_reward_value;
  g.estimator_no_worse = g.measured_gap <= 0.0;
  return g;
}

GapExperiment run_gap_experiment(const CoupledLaw& law, int n, std::size_t trials,
                                 std::size_t batches, Rng& rng) {
  if (batches < 2 || trials < batches * 2)
    throw std::invalid_argument("gap experiment needs >= 2 batches of >= 2 trials");
  std::vector<TargetSample> sampled(trials), estimated(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const PairedTargets p = draw_paired(law, n, rng);
    sampled[t] = p.sampled;
    estimated[t] = p.estimated;
  }
  const std::size_t per_batch = trials / batches;
  stats::RunningMoments batch_gaps;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::span<const TargetSample> s(sampled.data() + b * per_batch, per_batch);
    const std::span<const TargetSample> e(estimated.data() + b * per_batch, per_batch);
    batch_gaps.push(decompose_target_variance(e).var_target - decompose_target_variance(s).var_target);
  }
  // Batch SE scaled to the full sample size.
  const double se = std::sqrt(batch_gaps.variance() / static_cast<double>(batches));

  GapExperiment out;
  out.sampled = decompose_target_variance(sampled);
  out.estimated = decompose_target_variance(estimated);
  out.report = variance_gap(out.sampled, out.estimated, n, se);
  out.analytic_gap = predicted_variance_gap(law.var_reward(), law.cov_reward_value(), n);
  return out;
}

std::vector<RewardStatistics> measure_reward_statistics(const Environment& env,
                                                        const NoiseModel& noise,
                                                        const ActionSampler& policy,
                                                        const RewardModel& estimator, int episodes,
                                                        int trials, std::uint64_t seed) {
  if (!estimator.fitted()) throw std::invalid_argument("reward estimator was never fitted");
  if (episodes < 1 || trials < 1) throw std::invalid_argument("episodes and trials must be positive");
  std::vector<RewardStatistics> out;
  for (int trial = 0; trial < trials; ++trial) {
    NoisyEnvironment noisy(env.clone(), noise, seed + 1, static_cast<std::uint64_t>(trial));
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(trial));
    std::vector<double> r_true, r_corr, r_hat;
    for (int ep = 0; ep < episodes; ++ep) {
      Vec obs = noisy.reset(rng);
      while (!noisy.done()) {
        const Transition t = noisy.step(policy(obs, rng), rng);
        r_true.push_back(t.reward_true);
        r_corr.push_back(t.reward_observed);
        r_hat.push_back(estimator.predict(t));
        obs = t.next_state;
      }
    }
    if (r_true.size() < 2) throw std::invalid_argument("too few transitions to measure variance");
    RewardStatistics s;
    s.var_true = stats::variance(r_true);
    s.var_corrupted = stats::variance(r_corr);
    s.var_estimated = stats::variance(r_hat);
    s.mse_corrupted = stats::mean_squared_error(r_corr, r_true);
    s.mse_estimated = stats::mean_squared_error(r_hat, r_true);
    s.transitions = r_true.size();
    out.push_back(s);
  }
  return out;
}

RewardStatistics average(std::span<const RewardStatistics> xs) {
  if (xs.empty()) throw std::invalid_argument("no statistics to average");
  RewardStatistics a;
  for (const auto& s : xs) {
    a.var_true += s.var_true;
    a.var_corrupted += s.var_corrupted;
    a.var_estimated += s.var_estimated;
    a.mse_corrupted += s.mse_corrupted;
    a.mse_estimated += s.mse_estimated;
    a.transitions += s.transitions;
  }
  const double n = static_cast<double>(xs.size());
  a.var_true /= n;
  a.var_corrupted /= n;
  a.var_estimated /= n;
  a.mse_corrupted /= n;
  a.mse_estimated /= n;
  return a;
}

}  // namespace rewardlab
