#include "svpl/labelgen.hpp"

#include <algorithm>
#include <cmath>

#include "svpl/errors.hpp"

namespace svpl {
namespace {

constexpr double kPropensityFloor = 1e-3;
constexpr double kWeightCap = 1e3;

Eigen::RowVectorXd with_intercept(const Eigen::RowVectorXd& x) {
  Eigen::RowVectorXd z(x.size() + 1);
  z[0] = 1.0;
  z.tail(x.size()) = x;
  return z;
}

}  // namespace

MultinomialLogit MultinomialLogit::fit(const Eigen::MatrixXd& X,
                                       const std::vector<Arm>& labels, int num_classes,
                                       int max_iter) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols()) + 1;
  const int kk = num_classes - 1;  // free classes
  require(n > 0 && num_classes >= 2, ErrorCode::InvalidArgument,
          "MultinomialLogit: bad shapes");
  require(static_cast<int>(labels.size()) == n, ErrorCode::LengthMismatch,
          "MultinomialLogit: label length mismatch");

  Eigen::MatrixXd Z(n, p);
  for (int i = 0; i < n; ++i) Z.row(i) = with_intercept(X.row(i));

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kk * p);
  const double ridge = 1e-8;

  auto negloglik = [&](const Eigen::VectorXd& th) {
    double nll = 0.5 * ridge * th.squaredNorm();
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd logits = Eigen::VectorXd::Zero(num_classes);
      for (int c = 0; c < kk; ++c) logits[c] = Z.row(i).dot(th.segment(c * p, p));
      double mx = logits.maxCoeff();
      double lse = mx + std::log((logits.array() - mx).exp().sum());
      nll += lse - logits[labels[static_cast<std::size_t>(i)]];
    }
    return nll;
  };

  double current = negloglik(theta);
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd grad = ridge * theta;
    Eigen::MatrixXd hess = ridge * Eigen::MatrixXd::Identity(kk * p, kk * p);

    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd logits = Eigen::VectorXd::Zero(num_classes);
      for (int c = 0; c < kk; ++c) logits[c] = Z.row(i).dot(theta.segment(c * p, p));
      double mx = logits.maxCoeff();
      Eigen::VectorXd probs = (logits.array() - mx).exp();
      probs /= probs.sum();

      const Arm yi = labels[static_cast<std::size_t>(i)];
      for (int c = 0; c < kk; ++c) {
        double gc = probs[c] - (yi == c ? 1.0 : 0.0);
        grad.segment(c * p, p) += gc * Z.row(i).transpose();
        for (int c2 = 0; c2 < kk; ++c2) {
          double w = probs[c] * ((c == c2 ? 1.0 : 0.0) - probs[c2]);
          hess.block(c * p, c2 * p, p, p) += w * Z.row(i).transpose() * Z.row(i);
        }
      }
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    require(ldlt.info() == Eigen::Success, ErrorCode::Numerical,
            "MultinomialLogit: Hessian factorization failed");
    Eigen::VectorXd step = ldlt.solve(grad);

    double scale = 1.0;
    Eigen::VectorXd proposal = theta - scale * step;
    double next = negloglik(proposal);
    while (next > current && scale > 1e-6) {
      scale *= 0.5;
      proposal = theta - scale * step;
      next = negloglik(proposal);
    }
    double improvement = current - next;
    theta = proposal;
    current = next;
    if (improvement < 1e-10 * (std::abs(current) + 1.0)) break;
  }

  MultinomialLogit model;
  model.num_classes_ = num_classes;
  model.coef_.resize(kk, p);
  for (int c = 0; c < kk; ++c) model.coef_.row(c) = theta.segment(c * p, p);
  return model;
}

Eigen::VectorXd MultinomialLogit::probabilities(const Eigen::RowVectorXd& x) const {
  Eigen::RowVectorXd z = with_intercept(x);
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(num_classes_);
  for (int c = 0; c + 1 < num_classes_; ++c) logits[c] = z.dot(coef_.row(c));
  double mx = logits.maxCoeff();
  Eigen::VectorXd probs = (logits.array() - mx).exp();
  return probs / probs.sum();
}

std::unique_ptr<QLearningLabelGenerator> QLearningLabelGenerator::fit(
    const Dataset& ds, const std::vector<int>& fold, const BasisSpec& basis,
    bool importance_weighted) {
  auto gen = std::make_unique<QLearningLabelGenerator>();
  gen->meta_.method = importance_weighted ? "qlearn-iw" : "qlearn";
  gen->meta_.basis = basis.name();

  if (!importance_weighted) {
    gen->q_model_ = OlsArmRegressor::fit(ds, fold, basis);
    return gen;
  }

  Eigen::MatrixXd Xf(fold.size(), ds.covariates());
  std::vector<Arm> Af(fold.size());
  for (std::size_t r = 0; r < fold.size(); ++r) {
    Xf.row(static_cast<Eigen::Index>(r)) = ds.x(fold[r]);
    Af[r] = ds.A()[static_cast<std::size_t>(fold[r])];
  }
  MultinomialLogit propensity = MultinomialLogit::fit(Xf, Af, ds.num_arms());

  std::vector<double> weights(static_cast<std::size_t>(ds.rows()), 1.0);
  bool clipped = false;
  for (int i : fold) {
    Eigen::VectorXd probs = propensity.probabilities(ds.x(i));
    double pi_a = probs[ds.A()[static_cast<std::size_t>(i)]];
    if (pi_a < kPropensityFloor) clipped = true;
    weights[static_cast<std::size_t>(i)] = std::min(1.0 / std::max(pi_a, 0.0), kWeightCap);
  }
  gen->meta_.propensity_clipped = clipped;
  gen->q_model_ = OlsArmRegressor::fit_weighted(ds, fold, basis, weights);
  return gen;
}

Arm QLearningLabelGenerator::assign(const Eigen::RowVectorXd& x) const {
  return argmax_lowest(q_model_->predict_all(x));
}

}  // namespace svpl
