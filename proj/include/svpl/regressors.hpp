#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "svpl/basis.hpp"
#include "svpl/rng.hpp"
#include "svpl/types.hpp"

namespace svpl {

struct RegressorMeta {
  std::string method;
  std::string basis;
  bool ridge_fallback = false;
  bool propensity_clipped = false;
};

/// Per-arm conditional-mean estimator.
class ArmRegressor {
 public:
  virtual ~ArmRegressor() = default;
  virtual double predict(const Eigen::RowVectorXd& x, Arm a) const = 0;
  virtual int num_arms() const = 0;
  virtual const RegressorMeta& meta() const = 0;

  Eigen::VectorXd predict_all(const Eigen::RowVectorXd& x) const;
};

/// Adds two-sided confidence bounds on mu(x, a). `level` is the two-sided
/// confidence of the interval, so each tail carries (1 - level) / 2 mass;
/// lower <= predict <= upper holds for every level in (0.5, 1).
class BoundedArmRegressor : public ArmRegressor {
 public:
  virtual double lower(const Eigen::RowVectorXd& x, Arm a, double level) const = 0;
  virtual double upper(const Eigen::RowVectorXd& x, Arm a, double level) const = 0;

  virtual std::pair<double, double> bounds(const Eigen::RowVectorXd& x, Arm a,
                                           double level) const {
    return {lower(x, a, level), upper(x, a, level)};
  }
};

/// z multiplier for a two-sided Gaussian interval at `level`; +inf at level 1
/// and 0 at level 0.5, so the alpha grid endpoints stay usable.
double bound_z(double level);

/// Percentile band over bootstrap replicate predictions (sorted in place),
/// widened if needed to keep the point prediction inside.
std::pair<double, double> percentile_band(std::vector<double>& replicate_preds,
                                          double point, double level);

/// Ordinary least squares per arm on an expanded basis, with Gaussian
/// confidence bounds for the conditional mean built from the usual OLS
/// covariance. Singular designs fall back to a tiny ridge and are flagged.
class OlsArmRegressor final : public BoundedArmRegressor {
 public:
  static std::unique_ptr<OlsArmRegressor> fit(const Dataset& ds,
                                              const std::vector<int>& fold,
                                              const BasisSpec& basis);

  /// Weighted variant (row weights, e.g. inverse propensities).
  static std::unique_ptr<OlsArmRegressor> fit_weighted(const Dataset& ds,
                                                       const std::vector<int>& fold,
                                                       const BasisSpec& basis,
                                                       const std::vector<double>& weights);

  double predict(const Eigen::RowVectorXd& x, Arm a) const override;
  double lower(const Eigen::RowVectorXd& x, Arm a, double level) const override;
  double upper(const Eigen::RowVectorXd& x, Arm a, double level) const override;
  int num_arms() const override { return static_cast<int>(coef_.size()); }
  const RegressorMeta& meta() const override { return meta_; }

  double standard_error(const Eigen::RowVectorXd& x, Arm a) const;
  const Eigen::VectorXd& coefficients(Arm a) const;
  const Eigen::MatrixXd& coefficient_covariance(Arm a) const;

 private:
  BasisSpec basis_{BasisSpec::Kind::Linear};
  std::vector<Eigen::VectorXd> coef_;
  std::vector<Eigen::MatrixXd> cov_;
  RegressorMeta meta_;
};

/// Per-arm k-nearest-neighbor mean with percentile-bootstrap bounds. The
/// bootstrap resamples are drawn once at fit time; bound queries replay the
/// k-NN average under each replicate's multiplicities.
class KnnBootstrapRegressor final : public BoundedArmRegressor {
 public:
  static std::unique_ptr<KnnBootstrapRegressor> fit(const Dataset& ds,
                                                    const std::vector<int>& fold,
                                                    int k, int bootstrap_reps, Rng rng);

  double predict(const Eigen::RowVectorXd& x, Arm a) const override;
  double lower(const Eigen::RowVectorXd& x, Arm a, double level) const override;
  double upper(const Eigen::RowVectorXd& x, Arm a, double level) const override;
  std::pair<double, double> bounds(const Eigen::RowVectorXd& x, Arm a,
                                   double level) const override;
  int num_arms() const override { return static_cast<int>(arms_.size()); }
  const RegressorMeta& meta() const override { return meta_; }

  /// Point prediction plus one prediction per bootstrap replicate; lets
  /// callers cache bands across many confidence levels.
  std::pair<double, std::vector<double>> replicate_predictions(const Eigen::RowVectorXd& x,
                                                               Arm a) const;

 private:
  struct ArmData {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::vector<int>> bootstrap_counts;  // reps x rows multiplicities
  };

  std::vector<int> neighbor_order(const ArmData& arm, const Eigen::RowVectorXd& x) const;
  double replicate_prediction(const ArmData& arm, const std::vector<int>& order,
                              const std::vector<int>& counts) const;

  int k_ = 1;
  std::vector<ArmData> arms_;
  RegressorMeta meta_;
};

}  // namespace svpl
