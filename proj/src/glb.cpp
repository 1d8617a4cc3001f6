#include "svpl/glb.hpp"

#include "svpl/errors.hpp"

namespace svpl {

Arm glb_maxmin(const Eigen::RowVectorXd& x, const BoundedArmRegressor& bounded,
               double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::InvalidArgument,
          "glb_maxmin: alpha must lie in [0, 1]");
  const double level = 1.0 - alpha / 2.0;
  const int K = bounded.num_arms();
  Eigen::VectorXd lowers(K);
  for (Arm a = 0; a < K; ++a) lowers[a] = bounded.lower(x, a, level);
  return argmax_lowest(lowers);
}

TreatmentSet glb_set(const Eigen::RowVectorXd& x, const GlbPolicy& policy) {
  require(policy.bounds != nullptr, ErrorCode::InvalidArgument,
          "glb_set: bounds regressor missing");
  const double level = 1.0 - policy.alpha / 2.0;
  const Arm benchmark_arm = glb_maxmin(x, policy.maxmin_source(), policy.alpha);
  const double benchmark = policy.bounds->lower(x, benchmark_arm, level);

  const int K = policy.bounds->num_arms();
  std::vector<Arm> members;
  for (Arm a = 0; a < K; ++a) {
    if (policy.bounds->upper(x, a, level) >= benchmark) members.push_back(a);
  }
  return TreatmentSet(std::move(members), K);
}

SetValuedPolicy make_glb_policy(GlbPolicy policy) {
  SetValuedPolicy out;
  out.meta.method = "glb";
  out.meta.alpha = policy.alpha;
  out.meta.notes = policy.maxmin ? "split-maxmin" : "shared-fold";
  out.evaluate = [p = std::move(policy)](const Eigen::RowVectorXd& x) {
    return glb_set(x, p);
  };
  return out;
}

}  // namespace svpl
