#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "svpl/errors.hpp"
#include "svpl/rng.hpp"

namespace svpl {

/// Treatment arm index, 0-based internally. External interfaces (CSV, CLI)
/// use the 1-based convention; the conversion lives in serialization only.
using Arm = std::int32_t;

/// Sorted, duplicate-free subset of {0, ..., K-1}. Possibly empty.
class TreatmentSet {
 public:
  TreatmentSet() = default;
  TreatmentSet(std::vector<Arm> arms, int num_arms);

  static TreatmentSet full(int num_arms);
  static TreatmentSet single(Arm a, int num_arms);

  bool contains(Arm a) const;
  bool intersects(const TreatmentSet& other) const;
  int intersection_size(const TreatmentSet& other) const;

  bool empty() const { return arms_.empty(); }
  int size() const { return static_cast<int>(arms_.size()); }
  const std::vector<Arm>& arms() const { return arms_; }
  Arm lowest() const;

  bool operator==(const TreatmentSet& other) const { return arms_ == other.arms_; }

 private:
  std::vector<Arm> arms_;
};

/// Ground-truth quantities attached to a synthetic sample: per-row conditional
/// means, optimal-arm sets, and (optionally) the full potential-outcome draws
/// plus the secondary-outcome analogues.
struct OracleTruth {
  Eigen::MatrixXd mu;                                  // n x K
  std::vector<TreatmentSet> optimal_sets;              // argmax sets per row
  std::optional<Eigen::MatrixXd> potential_outcomes;   // n x K
  std::optional<Eigen::MatrixXd> secondary_mu;         // n x K
  std::optional<Eigen::MatrixXd> secondary_outcomes;   // n x K
};

/// Observational sample (X, A, Y) with K arms. Construction validates
/// finiteness of every entry and the arm range; instances are immutable.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd X, std::vector<Arm> A, Eigen::VectorXd Y, int num_arms,
          std::optional<OracleTruth> oracle = std::nullopt);

  int rows() const { return static_cast<int>(X_.rows()); }
  int covariates() const { return static_cast<int>(X_.cols()); }
  int num_arms() const { return num_arms_; }

  const Eigen::MatrixXd& X() const { return X_; }
  const std::vector<Arm>& A() const { return A_; }
  const Eigen::VectorXd& Y() const { return Y_; }
  Eigen::RowVectorXd x(int i) const { return X_.row(i); }

  bool has_oracle() const { return oracle_.has_value(); }
  const OracleTruth& oracle() const;

 private:
  Eigen::MatrixXd X_;
  std::vector<Arm> A_;
  Eigen::VectorXd Y_;
  int num_arms_;
  std::optional<OracleTruth> oracle_;
};

/// Disjoint index folds: black-box labeling, score training, calibration.
struct FoldSplit {
  std::vector<int> idx_b;
  std::vector<int> idx_train;
  std::vector<int> idx_cal;
};

struct PolicyMeta {
  std::string method;
  double alpha = 0.0;
  double r = 0.0;
  std::string notes;
};

/// Evaluated representation of a set-valued policy: covariates in, arm set out.
struct SetValuedPolicy {
  std::function<TreatmentSet(const Eigen::RowVectorXd&)> evaluate;
  PolicyMeta meta;
};

/// Shuffle rows into three disjoint folds of sizes floor(f_i * n), rounding
/// remainder assigned to the calibration fold. Throws EmptyFold if any fold
/// comes out empty.
FoldSplit split_three_way(const Dataset& ds, double frac_b, double frac_train,
                          double frac_cal, Rng& rng);

/// All arms within tol of the maximum value; never empty for finite input.
TreatmentSet argmax_set(const Eigen::VectorXd& values, double tol);

/// Strict argmax with ties broken toward the smallest index.
Arm argmax_lowest(const Eigen::VectorXd& values);

}  // namespace svpl
