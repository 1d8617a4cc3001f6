#pragma once

#include <memory>

#include "svpl/regressors.hpp"
#include "svpl/types.hpp"

namespace svpl {

/// Greatest-lower-bound set policy: pick the arm with the best lower
/// confidence bound as the benchmark, then keep every arm whose upper bound
/// reaches that benchmark. `maxmin` may be fitted on a different fold than
/// `bounds` to guard against overfitting; when it is null the bounds
/// regressor plays both roles.
struct GlbPolicy {
  std::shared_ptr<const BoundedArmRegressor> bounds;
  std::shared_ptr<const BoundedArmRegressor> maxmin;  // optional separate fold
  double alpha = 0.1;

  const BoundedArmRegressor& maxmin_source() const {
    return maxmin ? *maxmin : *bounds;
  }
};

/// Arm with the greatest lower bound at level 1 - alpha/2; ties toward the
/// smallest index.
Arm glb_maxmin(const Eigen::RowVectorXd& x, const BoundedArmRegressor& bounded,
               double alpha);

/// Arms whose upper bound meets the benchmark lower bound. The benchmark arm
/// is chosen by the maxmin source, its threshold value always comes from the
/// bounds regressor, so the set always contains the benchmark arm.
TreatmentSet glb_set(const Eigen::RowVectorXd& x, const GlbPolicy& policy);

SetValuedPolicy make_glb_policy(GlbPolicy policy);

}  // namespace svpl
