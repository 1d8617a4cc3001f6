#pragma once

#include <Eigen/Dense>
#include <string>

namespace svpl {

/// Feature expansion for the per-arm regressions. `linear` is the
/// deliberately misspecified preset; `dgp-aware` spans the synthetic
/// benchmark's mean surface exactly (baseline exp term, squared term, and
/// region-indicator interactions).
class BasisSpec {
 public:
  enum class Kind { Linear, DgpAware };

  explicit BasisSpec(Kind kind = Kind::Linear) : kind_(kind) {}
  static BasisSpec from_name(const std::string& name);

  Kind kind() const { return kind_; }
  std::string name() const;
  int dimension(int num_covariates) const;
  Eigen::RowVectorXd expand(const Eigen::RowVectorXd& x) const;

 private:
  Kind kind_;
};

}  // namespace svpl
