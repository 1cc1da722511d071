#include "rewardlab/features.hpp"

#include <stdexcept>

namespace rewardlab {

FeatureMode parse_feature_mode(std::string_view t) {
  if (t == "s") return FeatureMode::S;
  if (t == "sa") return FeatureMode::SA;
  if (t == "sas" || t == "sas'") return FeatureMode::SAS;
  throw std::invalid_argument("unknown feature mode: " + std::string(t));
}

std::string feature_mode_name(FeatureMode m) {
  switch (m) {
    case FeatureMode::S: return "s";
    case FeatureMode::SA: return "sa";
    case FeatureMode::SAS: return "sas";
  }
  return "?";
}

int feature_dim(FeatureMode m, int obs_dim, const ActionSpace& space) {
  switch (m) {
    case FeatureMode::S: return obs_dim;
    case FeatureMode::SA: return obs_dim + space.feature_dim();
    case FeatureMode::SAS: return 2 * obs_dim + space.feature_dim();
  }
  return obs_dim;
}

void write_features(FeatureMode m, const Transition& t, const ActionSpace& space,
                    Eigen::Ref<Vector> out) {
  const auto obs_dim = static_cast<Eigen::Index>(t.state.size());
  if (out.size() != feature_dim(m, static_cast<int>(obs_dim), space))
    throw std::invalid_argument("feature buffer has the wrong width");
  Eigen::Index k = 0;
  for (double x : t.state) out[k++] = x;
  if (m == FeatureMode::S) return;
  space.encode(t.action, std::span<double>(out.data() + k, static_cast<std::size_t>(space.feature_dim())));
  k += space.feature_dim();
  if (m == FeatureMode::SA) return;
  if (static_cast<Eigen::Index>(t.next_state.size()) != obs_dim)
    throw std::invalid_argument("next state dimension differs from state dimension");
  for (double x : t.next_state) out[k++] = x;
}

Matrix feature_matrix(FeatureMode m, std::span<const Transition> batch, const ActionSpace& space) {
  if (batch.empty()) throw std::invalid_argument("empty transition batch");
  const int dim = feature_dim(m, static_cast<int>(batch.front().state.size()), space);
  Matrix x(dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i)
    write_features(m, batch[i], space, x.col(static_cast<Eigen::Index>(i)));
  return x;
}

double ParametricRewardModel::predict(const Transition& t) const {
  Vector x(feature_dim(mode_, static_cast<int>(t.state.size()), space_));
  write_features(mode_, t, space_, x);
  return net_.forward(x)[0];
}

}  // namespace rewardlab
