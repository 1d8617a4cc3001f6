#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "svpl/basis.hpp"
#include "svpl/regressors.hpp"
#include "svpl/types.hpp"

namespace svpl {

struct GeneratorMeta {
  std::string method;
  std::string basis;
  bool propensity_clipped = false;
};

/// Black-box optimal-treatment labeler: covariates in, single arm out.
/// Deterministic once fitted.
class LabelGenerator {
 public:
  virtual ~LabelGenerator() = default;
  virtual Arm assign(const Eigen::RowVectorXd& x) const = 0;
  virtual const GeneratorMeta& meta() const = 0;
};

/// Multinomial logistic regression on [1, x], fitted by Newton iterations
/// with a small ridge for stability. Class K-1 is the reference.
class MultinomialLogit {
 public:
  static MultinomialLogit fit(const Eigen::MatrixXd& X, const std::vector<Arm>& labels,
                              int num_classes, int max_iter = 100);

  Eigen::VectorXd probabilities(const Eigen::RowVectorXd& x) const;
  int num_classes() const { return num_classes_; }

 private:
  Eigen::MatrixXd coef_;  // (K-1) x (d+1)
  int num_classes_ = 0;
};

/// Regression Q-learning: per-arm outcome regressions, label = argmax arm
/// (ties toward the smallest index). The importance-weighted variant
/// reweights rows by inverse estimated propensities, approximating the
/// doubly robust construction; weights are clipped at 1e3 and the clipping
/// is flagged in meta.
class QLearningLabelGenerator final : public LabelGenerator {
 public:
  static std::unique_ptr<QLearningLabelGenerator> fit(const Dataset& ds,
                                                      const std::vector<int>& fold,
                                                      const BasisSpec& basis,
                                                      bool importance_weighted = false);

  Arm assign(const Eigen::RowVectorXd& x) const override;
  const GeneratorMeta& meta() const override { return meta_; }
  const ArmRegressor& q_model() const { return *q_model_; }

 private:
  std::unique_ptr<OlsArmRegressor> q_model_;
  GeneratorMeta meta_;
};

}  // namespace svpl
