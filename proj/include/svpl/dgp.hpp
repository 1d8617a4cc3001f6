#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "svpl/types.hpp"

namespace svpl::dgp {

/// Synthetic observational benchmark: Gaussian covariates, five arms, a
/// linear decision boundary x1 + x2 = 0.5 separating two optimal-arm regimes
/// ({1,2} below, {3,4} above in 1-based labels), and a behavioral policy that
/// deliberately prefers the wrong arms near its own side of the boundary.
struct SyntheticConfig {
  int n = 6000;
  int d = 4;               // two informative + two noise dimensions
  int num_arms = 5;
  double noise_sd = 0.5;
  Eigen::VectorXd beta_low = (Eigen::VectorXd(5) << 10, 10, 1, 3, 2).finished();
  Eigen::VectorXd beta_high = (Eigen::VectorXd(5) << 2, 1, 10, 10, 4).finished();
  std::uint64_t seed = 0;
  bool secondary_outcome = false;
  double tie_tol = 1e-9;
};

/// Conditional mean outcome mu(x, a): baseline 2*x1 - exp(x2) plus a
/// region-gated interaction for arm groups {1,2} and {3,4}; arm 5 gets none.
double conditional_mean(const Eigen::RowVectorXd& x, Arm a);

/// Mean of the secondary outcome xi(x, a): increases linearly with the
/// (1-based) arm index, so lower arms are strictly cheaper.
double secondary_mean(const Eigen::RowVectorXd& x, Arm a);

/// Treatment-assignment probabilities: sigmoid mixture of the two preference
/// states, normalized to the simplex. Strictly positive everywhere (overlap).
Eigen::VectorXd behavioral_policy(const Eigen::RowVectorXd& x,
                                  const Eigen::VectorXd& beta_low,
                                  const Eigen::VectorXd& beta_high);
Eigen::VectorXd behavioral_policy(const Eigen::RowVectorXd& x);

/// Draw a full synthetic sample with oracle truth attached: conditional
/// means, optimal sets, all potential outcomes, and (optionally) the
/// secondary outcome surface.
Dataset generate(const SyntheticConfig& cfg);

}  // namespace svpl::dgp
