#include "svpl/dgp.hpp"

#include <cmath>

#include "svpl/errors.hpp"
#include "svpl/rng.hpp"

namespace svpl::dgp {
namespace {

// Stream ids for the independent random sources of one sample draw. Keeping
// them separate means toggling the secondary outcome cannot shift X, A or Y.
enum Stream : std::uint64_t {
  kCovariates = 1,
  kAssignment = 2,
  kOutcomeNoise = 3,
  kSecondaryNoise = 4,
};

}  // namespace

double conditional_mean(const Eigen::RowVectorXd& x, Arm a) {
  require(x.size() >= 2, ErrorCode::DimensionMismatch,
          "conditional_mean: needs at least two covariates");
  const double baseline = 2.0 * x[0] - std::exp(x[1]);
  const bool low_region = x[0] + x[1] < 0.5;
  double interaction = 0.0;
  if (a == 0 || a == 1) {
    interaction = low_region ? 5.0 * std::exp(x[0]) : 0.0;
  } else if (a == 2 || a == 3) {
    interaction = low_region ? 0.0 : 5.0 * (x[1] + 1.0) * (x[1] + 1.0);
  }
  return baseline + interaction;
}

double secondary_mean(const Eigen::RowVectorXd& x, Arm a) {
  require(x.size() >= 1, ErrorCode::DimensionMismatch,
          "secondary_mean: needs at least one covariate");
  return static_cast<double>(a + 1) + 0.2 * x[0];
}

Eigen::VectorXd behavioral_policy(const Eigen::RowVectorXd& x,
                                  const Eigen::VectorXd& beta_low,
                                  const Eigen::VectorXd& beta_high) {
  require(x.size() >= 2, ErrorCode::DimensionMismatch,
          "behavioral_policy: needs at least two covariates");
  require(beta_low.size() == beta_high.size(), ErrorCode::LengthMismatch,
          "behavioral_policy: preference vectors differ in length");
  require(beta_low.minCoeff() > 0.0 && beta_high.minCoeff() > 0.0,
          ErrorCode::InvalidArgument, "behavioral_policy: betas must be positive");
  const double w = 1.0 / (1.0 + std::exp(-(x[0] + x[1] - 0.5)));
  Eigen::VectorXd raw = w * beta_low + (1.0 - w) * beta_high;
  return raw / raw.sum();
}

Eigen::VectorXd behavioral_policy(const Eigen::RowVectorXd& x) {
  SyntheticConfig defaults;
  return behavioral_policy(x, defaults.beta_low, defaults.beta_high);
}

Dataset generate(const SyntheticConfig& cfg) {
  require(cfg.n >= 1, ErrorCode::InvalidArgument, "generate: n must be positive");
  require(cfg.d >= 2, ErrorCode::DimensionMismatch, "generate: need d >= 2");
  require(cfg.num_arms == cfg.beta_low.size(), ErrorCode::LengthMismatch,
          "generate: beta length must equal number of arms");
  require(cfg.noise_sd >= 0.0, ErrorCode::InvalidArgument,
          "generate: negative noise sd");

  const int n = cfg.n;
  const int K = cfg.num_arms;

  Rng root(cfg.seed);
  Rng rng_x = root.stream(Stream::kCovariates);
  Rng rng_a = root.stream(Stream::kAssignment);
  Rng rng_eps = root.stream(Stream::kOutcomeNoise);
  Rng rng_xi = root.stream(Stream::kSecondaryNoise);

  Eigen::MatrixXd X(n, cfg.d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < cfg.d; ++j) X(i, j) = rng_x.next_gaussian();
  }

  std::vector<Arm> A(static_cast<std::size_t>(n));
  Eigen::MatrixXd mu(n, K);
  Eigen::MatrixXd potential(n, K);
  Eigen::VectorXd Y(n);
  std::vector<TreatmentSet> optimal;
  optimal.reserve(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    const Eigen::RowVectorXd xi = X.row(i);
    Eigen::VectorXd probs = behavioral_policy(xi, cfg.beta_low, cfg.beta_high);
    A[static_cast<std::size_t>(i)] =
        static_cast<Arm>(rng_a.next_categorical({probs.data(), static_cast<std::size_t>(K)}));
    for (Arm a = 0; a < K; ++a) {
      mu(i, a) = conditional_mean(xi, a);
      potential(i, a) = mu(i, a) + cfg.noise_sd * rng_eps.next_gaussian();
    }
    Y[i] = potential(i, A[static_cast<std::size_t>(i)]);  // consistency
    optimal.push_back(argmax_set(mu.row(i), cfg.tie_tol));
  }

  OracleTruth oracle;
  oracle.mu = std::move(mu);
  oracle.optimal_sets = std::move(optimal);
  oracle.potential_outcomes = std::move(potential);

  if (cfg.secondary_outcome) {
    Eigen::MatrixXd xi_mu(n, K);
    Eigen::MatrixXd xi_draws(n, K);
    for (int i = 0; i < n; ++i) {
      const Eigen::RowVectorXd xi = X.row(i);
      for (Arm a = 0; a < K; ++a) {
        xi_mu(i, a) = secondary_mean(xi, a);
        xi_draws(i, a) = xi_mu(i, a) + cfg.noise_sd * rng_xi.next_gaussian();
      }
    }
    oracle.secondary_mu = std::move(xi_mu);
    oracle.secondary_outcomes = std::move(xi_draws);
  }

  return Dataset(std::move(X), std::move(A), std::move(Y), K, std::move(oracle));
}

}  // namespace svpl::dgp
