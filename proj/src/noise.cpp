#include "rewardlab/noise.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "rewardlab/csv.hpp"

namespace rewardlab {

bool NoiseModel::is_identity() const {
  return kind == NoiseKind::Gaussian ? sigma == 0.0 : epsilon == 0.0;
}

double NoiseModel::level() const { return kind == NoiseKind::Gaussian ? sigma : epsilon; }

void NoiseModel::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("noise sigma must be >= 0");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("noise epsilon must lie in [0, 1]");
  if (!(low <= high)) throw std::invalid_argument("uniform noise bounds need low <= high");
}

std::string noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::UniformReplace: return "uniform";
    case NoiseKind::Sparsify: return "sparse";
  }
  return "?";
}

std::string NoiseModel::label() const {
  if (kind == NoiseKind::Gaussian && sigma == 0.0) return "none";
  return std::string(noise_kind_name(kind)) + ':' + format_double(level());
}

double corrupt(const NoiseModel& m, double r, Rng& rng) {
  switch (m.kind) {
    case NoiseKind::Gaussian: {
      if (m.sigma == 0.0) return r;
      std::normal_distribution<double> psi(0.0, m.sigma);
      return r + psi(rng);
    }
    case NoiseKind::UniformReplace: {
      if (m.epsilon == 0.0) return r;
      std::bernoulli_distribution replace(m.epsilon);
      if (!replace(rng)) return r;
      std::uniform_real_distribution<double> psi(m.low, m.high);
      return psi(rng);
    }
    case NoiseKind::Sparsify: {
      if (m.epsilon == 0.0) return r;
      std::bernoulli_distribution drop(m.epsilon);
      return drop(rng) ? 0.0 : r;
    }
  }
  return r;
}

double expected_corrupted(const NoiseModel& m, double mu) {
  switch (m.kind) {
    case NoiseKind::Gaussian: return mu;
    case NoiseKind::UniformReplace: return (1.0 - m.epsilon) * mu + m.epsilon * 0.5 * (m.low + m.high);
    case NoiseKind::Sparsify: return (1.0 - m.epsilon) * mu;
  }
  return mu;
}

double corrupted_variance(const NoiseModel& m, double mu, double var) {
  if (var < 0.0) throw std::invalid_argument("true variance must be nonnegative");
  const double e = m.epsilon;
  switch (m.kind) {
    case NoiseKind::Gaussian: return var + m.sigma * m.sigma;
    case NoiseKind::UniformReplace: {
      // Law of total variance over the replace / keep mixture.
      const double u_mean = 0.5 * (m.low + m.high);
      const double u_var = (m.high - m.low) * (m.high - m.low) / 12.0;
      return (1.0 - e) * var + e * u_var + e * (1.0 - e) * (mu - u_mean) * (mu - u_mean);
    }
    case NoiseKind::Sparsify: return (1.0 - e) * var + e * (1.0 - e) * mu * mu;
  }
  return var;
}

NoiseKind parse_noise_kind(std::string_view t) {
  if (t == "gaussian" || t == "gauss") return NoiseKind::Gaussian;
  if (t == "uniform") return NoiseKind::UniformReplace;
  if (t == "sparse" || t == "sparsify" || t == "sparsity") return NoiseKind::Sparsify;
  throw std::invalid_argument("unknown noise kind: " + std::string(t));
}

NoiseModel with_level(NoiseModel m, double level) {
  if (m.kind == NoiseKind::Gaussian)
    m.sigma = level;
  else
    m.epsilon = level;
  m.validate();
  return m;
}

NoiseModel parse_noise(std::string_view text) {
  if (text == "none" || text.empty()) return NoiseModel::identity();
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw std::invalid_argument("noise must look like kind:level, got " + std::string(text));
  NoiseModel m;
  m.kind = parse_noise_kind(text.substr(0, colon));
  const auto num = text.substr(colon + 1);
  double level = 0.0;
  auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), level);
  if (ec != std::errc{} || ptr != num.data() + num.size())
    throw std::invalid_argument("bad noise level: " + std::string(num));
  return with_level(m, level);
}

NoisyEnvironment::NoisyEnvironment(std::unique_ptr<Environment> inner, NoiseModel model,
                                   std::uint64_t noise_seed, std::uint64_t stream)
    : inner_(std::move(inner)), model_(model), noise_rng_(make_rng(noise_seed, stream)) {
  model_.validate();
}

NoisyEnvironment::NoisyEnvironment(const NoisyEnvironment& other)
    : inner_(other.inner_->clone()), model_(other.model_), noise_rng_(other.noise_rng_) {}

Transition NoisyEnvironment::step(std::span<const double> action, Rng& rng) {
  Transition t = inner_->step(action, rng);
  t.reward_observed = corrupt(model_, t.reward_true, noise_rng_);
  return t;
}

}  // namespace rewardlab
