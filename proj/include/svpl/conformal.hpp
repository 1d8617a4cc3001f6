#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "svpl/labelgen.hpp"
#include "svpl/regressors.hpp"
#include "svpl/rng.hpp"
#include "svpl/types.hpp"

namespace svpl {

using MuFn = std::function<double(const Eigen::RowVectorXd&, Arm)>;

/// Margin-based nonconformity score: how far arm a falls short of the best
/// competing arm under a conditional-mean model. Optimal arms score <= 0.
class ScoreFunction {
 public:
  enum class Kind { Oracular, Empirical };

  ScoreFunction(MuFn mu, int num_arms, Kind kind);

  static ScoreFunction oracular(MuFn mu, int num_arms);
  static ScoreFunction empirical(std::shared_ptr<const ArmRegressor> model);

  double operator()(const Eigen::RowVectorXd& x, Arm a) const;

  /// Scores for every arm at once (one pass over the mean values).
  Eigen::VectorXd all_arms(const Eigen::RowVectorXd& x) const;

  int num_arms() const { return num_arms_; }
  Kind kind() const { return kind_; }

 private:
  MuFn mu_;
  int num_arms_;
  Kind kind_;
};

/// Margin scores from a precomputed vector of per-arm means.
double margin_score(const Eigen::VectorXd& mu_values, Arm a);
Eigen::VectorXd margin_scores(const Eigen::VectorXd& mu_values);

/// Order-statistic rank ceil((1-alpha)(n+1)); above n means +inf, at or
/// below zero means -inf.
long conformal_rank(std::size_t n_cal, double alpha);

/// k-th smallest score with k = ceil((1-alpha)(n+1)); +inf when k exceeds n
/// (alpha near 0), -inf when k is nonpositive (alpha = 1).
double conformal_quantile(const std::vector<double>& scores, double alpha);

/// Same quantile from an already-sorted vector; handy when sweeping alpha.
double conformal_quantile_sorted(const std::vector<double>& sorted_scores, double alpha);

/// Bernoulli(r) mask that replaces labels with uniform arms; mask and
/// replacement draws come from independent streams of `rng`.
std::vector<Arm> inject_randomness(const std::vector<Arm>& labels, double r,
                                   int num_arms, Rng& rng);

struct CalibrationResult {
  std::vector<double> scores;
  double q_hat = 0.0;
  double alpha = 0.0;
  double r = 0.0;
  std::string label_source;
  std::vector<Arm> labels;  // perturbed labels actually scored
};

/// Noisy calibration: black-box labels on the calibration fold, optional
/// randomness injection, margin scores, finite-sample quantile.
CalibrationResult calibrate(const Dataset& ds, const std::vector<int>& fold_cal,
                            const LabelGenerator& gen, const ScoreFunction& score,
                            double alpha, double r, Rng rng);

/// Oracular variant: labels drawn uniformly from the optimal set of each row
/// (requires oracle truth).
CalibrationResult calibrate_oracular(const Dataset& ds, const std::vector<int>& fold_cal,
                                     const ScoreFunction& score, double alpha, Rng rng);

/// Arms scoring strictly below the calibrated threshold.
TreatmentSet conformal_set(const Eigen::RowVectorXd& x, const ScoreFunction& score,
                           double q_hat);

SetValuedPolicy make_conformal_policy(ScoreFunction score, double q_hat, PolicyMeta meta);

}  // namespace svpl
