#include "svpl/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "svpl/stats.hpp"

namespace svpl {
namespace {

constexpr double kRidgePenalty = 1e-8;

std::vector<std::vector<int>> rows_by_arm(const Dataset& ds, const std::vector<int>& fold) {
  std::vector<std::vector<int>> by_arm(static_cast<std::size_t>(ds.num_arms()));
  for (int i : fold) {
    require(i >= 0 && i < ds.rows(), ErrorCode::InvalidArgument,
            "fold index out of range");
    by_arm[static_cast<std::size_t>(ds.A()[static_cast<std::size_t>(i)])].push_back(i);
  }
  return by_arm;
}

}  // namespace

double bound_z(double level) {
  require(level >= 0.5 && level <= 1.0, ErrorCode::InvalidArgument,
          "confidence level must lie in [0.5, 1]");
  if (level >= 1.0) return std::numeric_limits<double>::infinity();
  if (level <= 0.5) return 0.0;
  return stats::normal_quantile(0.5 + level / 2.0);  // two-sided: tail (1-level)/2
}

std::pair<double, double> percentile_band(std::vector<double>& replicate_preds,
                                          double point, double level) {
  require(level >= 0.5 && level <= 1.0, ErrorCode::InvalidArgument,
          "confidence level must lie in [0.5, 1]");
  std::sort(replicate_preds.begin(), replicate_preds.end());
  const double tail = (1.0 - level) / 2.0;
  double lo = stats::sorted_quantile(replicate_preds, tail);
  double hi = stats::sorted_quantile(replicate_preds, 1.0 - tail);
  // Keep the point prediction inside the band.
  return {std::min(lo, point), std::max(hi, point)};
}

Eigen::VectorXd ArmRegressor::predict_all(const Eigen::RowVectorXd& x) const {
  Eigen::VectorXd out(num_arms());
  for (Arm a = 0; a < num_arms(); ++a) out[a] = predict(x, a);
  return out;
}

std::unique_ptr<OlsArmRegressor> OlsArmRegressor::fit(const Dataset& ds,
                                                      const std::vector<int>& fold,
                                                      const BasisSpec& basis) {
  return fit_weighted(ds, fold, basis, {});
}

std::unique_ptr<OlsArmRegressor> OlsArmRegressor::fit_weighted(
    const Dataset& ds, const std::vector<int>& fold, const BasisSpec& basis,
    const std::vector<double>& weights) {
  require(weights.empty() || weights.size() == static_cast<std::size_t>(ds.rows()),
          ErrorCode::LengthMismatch, "fit_weighted: weights must cover all rows");

  const int K = ds.num_arms();
  const int p = basis.dimension(ds.covariates());
  auto by_arm = rows_by_arm(ds, fold);

  auto model = std::make_unique<OlsArmRegressor>();
  model->basis_ = basis;
  model->meta_.method = weights.empty() ? "ols" : "ols-weighted";
  model->meta_.basis = basis.name();
  model->coef_.resize(static_cast<std::size_t>(K));
  model->cov_.resize(static_cast<std::size_t>(K));

  for (Arm a = 0; a < K; ++a) {
    const auto& rows = by_arm[static_cast<std::size_t>(a)];
    const int m = static_cast<int>(rows.size());
    require(m >= p + 1, ErrorCode::ArmUnderflow,
            "arm " + std::to_string(a + 1) + " has " + std::to_string(m) +
                " rows; needs at least " + std::to_string(p + 1));

    Eigen::MatrixXd Phi(m, p);
    Eigen::VectorXd y(m);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(m);
    for (int r = 0; r < m; ++r) {
      Phi.row(r) = basis.expand(ds.x(rows[static_cast<std::size_t>(r)]));
      y[r] = ds.Y()[rows[static_cast<std::size_t>(r)]];
      if (!weights.empty()) w[r] = weights[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
    }

    Eigen::MatrixXd gram = Phi.transpose() * w.asDiagonal() * Phi;
    Eigen::VectorXd moment = Phi.transpose() * (w.array() * y.array()).matrix();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    if (qr.rank() < p) {
      gram.diagonal().array() += kRidgePenalty;
      model->meta_.ridge_fallback = true;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    require(ldlt.info() == Eigen::Success, ErrorCode::Numerical,
            "OLS normal equations failed for arm " + std::to_string(a + 1));
    Eigen::VectorXd beta = ldlt.solve(moment);

    Eigen::VectorXd resid = y - Phi * beta;
    double rss = (w.array() * resid.array().square()).sum();
    double sigma2 = rss / static_cast<double>(m - p);
    Eigen::MatrixXd gram_inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

    model->coef_[static_cast<std::size_t>(a)] = std::move(beta);
    model->cov_[static_cast<std::size_t>(a)] = sigma2 * gram_inv;
  }
  return model;
}

double OlsArmRegressor::predict(const Eigen::RowVectorXd& x, Arm a) const {
  return basis_.expand(x).dot(coef_[static_cast<std::size_t>(a)]);
}

double OlsArmRegressor::standard_error(const Eigen::RowVectorXd& x, Arm a) const {
  Eigen::RowVectorXd phi = basis_.expand(x);
  double v = phi * cov_[static_cast<std::size_t>(a)] * phi.transpose();
  return std::sqrt(std::max(v, 0.0));
}

double OlsArmRegressor::lower(const Eigen::RowVectorXd& x, Arm a, double level) const {
  const double z = bound_z(level);
  if (std::isinf(z)) return -z;
  return predict(x, a) - z * standard_error(x, a);
}

double OlsArmRegressor::upper(const Eigen::RowVectorXd& x, Arm a, double level) const {
  const double z = bound_z(level);
  if (std::isinf(z)) return z;
  return predict(x, a) + z * standard_error(x, a);
}

const Eigen::VectorXd& OlsArmRegressor::coefficients(Arm a) const {
  return coef_[static_cast<std::size_t>(a)];
}

const Eigen::MatrixXd& OlsArmRegressor::coefficient_covariance(Arm a) const {
  return cov_[static_cast<std::size_t>(a)];
}

std::unique_ptr<KnnBootstrapRegressor> KnnBootstrapRegressor::fit(
    const Dataset& ds, const std::vector<int>& fold, int k, int bootstrap_reps, Rng rng) {
  require(k >= 1, ErrorCode::InvalidArgument, "knn: k must be positive");
  require(bootstrap_reps >= 50, ErrorCode::InvalidArgument,
          "knn: need at least 50 bootstrap replicates");

  auto by_arm = rows_by_arm(ds, fold);
  auto model = std::make_unique<KnnBootstrapRegressor>();
  model->k_ = k;
  model->meta_.method = "knn-bootstrap";
  model->arms_.resize(by_arm.size());

  for (Arm a = 0; a < ds.num_arms(); ++a) {
    const auto& rows = by_arm[static_cast<std::size_t>(a)];
    const int m = static_cast<int>(rows.size());
    require(m >= k, ErrorCode::ArmUnderflow,
            "arm " + std::to_string(a + 1) + " has fewer rows than k");

    ArmData& arm = model->arms_[static_cast<std::size_t>(a)];
    arm.X.resize(m, ds.covariates());
    arm.y.resize(m);
    for (int r = 0; r < m; ++r) {
      arm.X.row(r) = ds.x(rows[static_cast<std::size_t>(r)]);
      arm.y[r] = ds.Y()[rows[static_cast<std::size_t>(r)]];
    }

    Rng arm_rng = rng.stream(static_cast<std::uint64_t>(a));
    arm.bootstrap_counts.assign(static_cast<std::size_t>(bootstrap_reps),
                                std::vector<int>(static_cast<std::size_t>(m), 0));
    for (int b = 0; b < bootstrap_reps; ++b) {
      auto& counts = arm.bootstrap_counts[static_cast<std::size_t>(b)];
      for (int draw = 0; draw < m; ++draw) ++counts[static_cast<std::size_t>(arm_rng.next_int(m))];
    }
  }
  return model;
}

std::vector<int> KnnBootstrapRegressor::neighbor_order(const ArmData& arm,
                                                       const Eigen::RowVectorXd& x) const {
  const int m = static_cast<int>(arm.X.rows());
  std::vector<double> dist(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) dist[static_cast<std::size_t>(r)] = (arm.X.row(r) - x).squaredNorm();
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    double dl = dist[static_cast<std::size_t>(lhs)];
    double dr = dist[static_cast<std::size_t>(rhs)];
    return dl != dr ? dl < dr : lhs < rhs;
  });
  return order;
}

double KnnBootstrapRegressor::replicate_prediction(const ArmData& arm,
                                                   const std::vector<int>& order,
                                                   const std::vector<int>& counts) const {
  int needed = k_;
  double total = 0.0;
  for (int idx : order) {
    int mult = counts[static_cast<std::size_t>(idx)];
    if (mult == 0) continue;
    int take = std::min(mult, needed);
    total += take * arm.y[idx];
    needed -= take;
    if (needed == 0) break;
  }
  // A resample can hold fewer than k distinct rows only if k > m; guarded at fit.
  int used = k_ - needed;
  return total / static_cast<double>(used);
}

double KnnBootstrapRegressor::predict(const Eigen::RowVectorXd& x, Arm a) const {
  const ArmData& arm = arms_[static_cast<std::size_t>(a)];
  auto order = neighbor_order(arm, x);
  double total = 0.0;
  for (int r = 0; r < k_; ++r) total += arm.y[order[static_cast<std::size_t>(r)]];
  return total / static_cast<double>(k_);
}

std::pair<double, std::vector<double>> KnnBootstrapRegressor::replicate_predictions(
    const Eigen::RowVectorXd& x, Arm a) const {
  const ArmData& arm = arms_[static_cast<std::size_t>(a)];
  auto order = neighbor_order(arm, x);

  double point = 0.0;
  for (int r = 0; r < k_; ++r) point += arm.y[order[static_cast<std::size_t>(r)]];
  point /= static_cast<double>(k_);

  std::vector<double> preds;
  preds.reserve(arm.bootstrap_counts.size());
  for (const auto& counts : arm.bootstrap_counts) {
    preds.push_back(replicate_prediction(arm, order, counts));
  }
  return {point, std::move(preds)};
}

std::pair<double, double> KnnBootstrapRegressor::bounds(const Eigen::RowVectorXd& x, Arm a,
                                                        double level) const {
  auto [point, preds] = replicate_predictions(x, a);
  return percentile_band(preds, point, level);
}

double KnnBootstrapRegressor::lower(const Eigen::RowVectorXd& x, Arm a, double level) const {
  return bounds(x, a, level).first;
}

double KnnBootstrapRegressor::upper(const Eigen::RowVectorXd& x, Arm a, double level) const {
  return bounds(x, a, level).second;
}

}  // namespace svpl
