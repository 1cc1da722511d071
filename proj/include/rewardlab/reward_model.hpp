#pragma once

#include "rewardlab/env.hpp"

namespace rewardlab {

// Anything that predicts the expected observed reward of a transition.
class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual double predict(const Transition& t) const = 0;
  virtual bool fitted() const = 0;
};

}  // namespace rewardlab
