#pragma once

#include <span>
#include <string>
#include <string_view>

#include "rewardlab/env.hpp"
#include "rewardlab/nn.hpp"
#include "rewardlab/reward_model.hpp"

namespace rewardlab {

// Which parts of a transition the reward estimator conditions on.
enum class FeatureMode { S, SA, SAS };

FeatureMode parse_feature_mode(std::string_view text);  // "s", "sa", "sas"
std::string feature_mode_name(FeatureMode mode);

// |s|, |s|+|a| or 2|s|+|a|, where |a| is the action encoding width.
int feature_dim(FeatureMode mode, int obs_dim, const ActionSpace& space);

void write_features(FeatureMode mode, const Transition& t, const ActionSpace& space,
                    Eigen::Ref<Vector> out);
Matrix feature_matrix(FeatureMode mode, std::span<const Transition> batch, const ActionSpace& space);

// Regression network predicting E[r_observed | features].
class ParametricRewardModel final : public RewardModel {
 public:
  ParametricRewardModel(Mlp net, FeatureMode mode, ActionSpace space)
      : net_(std::move(net)), mode_(mode), space_(space) {}

  double predict(const Transition& t) const override;
  bool fitted() const override { return fitted_; }
  void mark_fitted() { fitted_ = true; }

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  FeatureMode mode() const { return mode_; }
  const ActionSpace& space() const { return space_; }

 private:
  Mlp net_;
  FeatureMode mode_;
  ActionSpace space_;
  bool fitted_ = false;
};

}  // namespace rewardlab
