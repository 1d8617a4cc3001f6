#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svpl/rng.hpp"
#include "svpl/types.hpp"

namespace svpl {

/// Rule that picks one arm from a nonempty set. Throws EmptySet on an empty
/// set; the caller decides the fallback (evaluation uses a uniform draw over
/// all arms, reported separately via empty_fraction).
struct ChoiceFunction {
  std::string name;
  std::function<Arm(const TreatmentSet&, const Eigen::RowVectorXd&, Rng&)> choose;
};

Arm choose_uniform(const TreatmentSet& set, Rng& rng);
Arm choose_lower(const TreatmentSet& set);

ChoiceFunction uniform_choice();
ChoiceFunction lower_choice();

struct CoveragePair {
  double prop = 0.0;  // mean |truth ∩ set| / |truth|
  double hit = 0.0;   // mean 1{truth ∩ set nonempty}
};

CoveragePair coverage(const std::vector<TreatmentSet>& sets,
                      const std::vector<TreatmentSet>& truth);

/// Closed-form set-policy values against a per-row conditional-mean matrix.
/// Empty sets contribute the uniform-over-all-arms fallback.
double spv_uniform(const std::vector<TreatmentSet>& sets, const Eigen::MatrixXd& mu);
double spv_lower(const std::vector<TreatmentSet>& sets, const Eigen::MatrixXd& mu);
/// Best-in-set oracle choice; upper bound used by the uniform-sampling
/// comparison check.
double spv_best_in_set(const std::vector<TreatmentSet>& sets, const Eigen::MatrixXd& mu);

/// Monte-Carlo set-policy value for an arbitrary choice function.
double set_policy_value_mc(const std::vector<TreatmentSet>& sets,
                           const Eigen::MatrixXd& X, const Eigen::MatrixXd& mu,
                           const ChoiceFunction& choice, Rng& rng, int mc_draws);

struct EvaluationReport {
  double coverage_hit = 0.0;
  double coverage_prop = 0.0;
  double cov_region_12 = 0.0;  // rows with x1 + x2 < 0.5
  double cov_region_34 = 0.0;  // rows with x1 + x2 >= 0.5
  double mean_cardinality = 0.0;
  double empty_fraction = 0.0;
  double spv_uniform = 0.0;
  double spv_lower = 0.0;
  std::optional<double> delta_at_qhat;
};

/// Aggregate one (method, alpha, r, n) cell: coverage overall and per
/// optimal-regime region, cardinality, empties, closed-form SPVs. Needs
/// oracle truth on the evaluation data.
EvaluationReport evaluate_cell(const std::vector<TreatmentSet>& sets,
                               const Dataset& eval_ds,
                               std::optional<double> delta_at_qhat = std::nullopt);

}  // namespace svpl
