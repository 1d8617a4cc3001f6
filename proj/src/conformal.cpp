#include "svpl/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svpl/errors.hpp"

namespace svpl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum Stream : std::uint64_t {
  kBernoulliMask = 11,
  kUniformArm = 12,
  kOracleLabel = 13,
};

}  // namespace

ScoreFunction::ScoreFunction(MuFn mu, int num_arms, Kind kind)
    : mu_(std::move(mu)), num_arms_(num_arms), kind_(kind) {
  require(num_arms_ >= 2, ErrorCode::InvalidArgument, "ScoreFunction: need K >= 2");
  require(static_cast<bool>(mu_), ErrorCode::InvalidArgument,
          "ScoreFunction: empty mean function");
}

ScoreFunction ScoreFunction::oracular(MuFn mu, int num_arms) {
  return ScoreFunction(std::move(mu), num_arms, Kind::Oracular);
}

ScoreFunction ScoreFunction::empirical(std::shared_ptr<const ArmRegressor> model) {
  require(model != nullptr, ErrorCode::InvalidArgument, "ScoreFunction: null model");
  int arms = model->num_arms();
  return ScoreFunction(
      [m = std::move(model)](const Eigen::RowVectorXd& x, Arm a) { return m->predict(x, a); },
      arms, Kind::Empirical);
}

double ScoreFunction::operator()(const Eigen::RowVectorXd& x, Arm a) const {
  Eigen::VectorXd values(num_arms_);
  for (Arm b = 0; b < num_arms_; ++b) values[b] = mu_(x, b);
  return margin_score(values, a);
}

Eigen::VectorXd ScoreFunction::all_arms(const Eigen::RowVectorXd& x) const {
  Eigen::VectorXd values(num_arms_);
  for (Arm b = 0; b < num_arms_; ++b) values[b] = mu_(x, b);
  return margin_scores(values);
}

double margin_score(const Eigen::VectorXd& mu_values, Arm a) {
  require(mu_values.size() >= 2, ErrorCode::InvalidArgument, "margin_score: need K >= 2");
  double best_other = -kInf;
  for (Eigen::Index b = 0; b < mu_values.size(); ++b) {
    if (b != a) best_other = std::max(best_other, mu_values[b]);
  }
  return best_other - mu_values[a];
}

Eigen::VectorXd margin_scores(const Eigen::VectorXd& mu_values) {
  const Eigen::Index K = mu_values.size();
  Eigen::VectorXd out(K);
  // max over a' != a is either the global max or, at the argmax, the runner-up
  Eigen::Index arg_best = 0;
  for (Eigen::Index b = 1; b < K; ++b) {
    if (mu_values[b] > mu_values[arg_best]) arg_best = b;
  }
  double best = mu_values[arg_best];
  double runner_up = -kInf;
  for (Eigen::Index b = 0; b < K; ++b) {
    if (b != arg_best) runner_up = std::max(runner_up, mu_values[b]);
  }
  for (Eigen::Index a = 0; a < K; ++a) {
    out[a] = (a == arg_best ? runner_up : best) - mu_values[a];
  }
  return out;
}

long conformal_rank(std::size_t n_cal, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::InvalidArgument,
          "conformal_rank: alpha outside [0, 1]");
  const auto n = static_cast<long>(n_cal);
  // Nudge below the ceil so an exact-integer product is not pushed one rank up
  // by floating-point round-off.
  const long double target = (1.0L - static_cast<long double>(alpha)) * (n + 1);
  return static_cast<long>(std::ceil(static_cast<double>(target - 1e-9L)));
}

double conformal_quantile(const std::vector<double>& scores, double alpha) {
  require(!scores.empty(), ErrorCode::EmptyScores, "conformal_quantile: empty scores");
  const long k = conformal_rank(scores.size(), alpha);
  const auto n = static_cast<long>(scores.size());
  if (k > n) return kInf;
  if (k <= 0) return -kInf;
  std::vector<double> work(scores);
  std::nth_element(work.begin(), work.begin() + (k - 1), work.end());
  return work[static_cast<std::size_t>(k - 1)];
}

double conformal_quantile_sorted(const std::vector<double>& sorted_scores, double alpha) {
  require(!sorted_scores.empty(), ErrorCode::EmptyScores,
          "conformal_quantile_sorted: empty scores");
  const long k = conformal_rank(sorted_scores.size(), alpha);
  const auto n = static_cast<long>(sorted_scores.size());
  if (k > n) return kInf;
  if (k <= 0) return -kInf;
  return sorted_scores[static_cast<std::size_t>(k - 1)];
}

std::vector<Arm> inject_randomness(const std::vector<Arm>& labels, double r,
                                   int num_arms, Rng& rng) {
  require(r >= 0.0 && r <= 1.0, ErrorCode::InvalidArgument,
          "inject_randomness: r outside [0, 1]");
  Rng mask_rng = rng.stream(Stream::kBernoulliMask);
  Rng arm_rng = rng.stream(Stream::kUniformArm);
  std::vector<Arm> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Arm random_arm = static_cast<Arm>(arm_rng.next_int(num_arms));
    const bool replace = mask_rng.next_double() < r;
    out[i] = replace ? random_arm : labels[i];
  }
  return out;
}

namespace {

CalibrationResult finish_calibration(const Dataset& ds, const std::vector<int>& fold_cal,
                                     std::vector<Arm> labels, const ScoreFunction& score,
                                     double alpha, double r, std::string source, Rng& rng) {
  std::vector<Arm> perturbed =
      r > 0.0 ? inject_randomness(labels, r, ds.num_arms(), rng) : labels;

  CalibrationResult result;
  result.scores.reserve(fold_cal.size());
  for (std::size_t j = 0; j < fold_cal.size(); ++j) {
    result.scores.push_back(score(ds.x(fold_cal[j]), perturbed[j]));
  }
  result.q_hat = conformal_quantile(result.scores, alpha);
  result.alpha = alpha;
  result.r = r;
  result.label_source = std::move(source);
  result.labels = std::move(perturbed);
  return result;
}

}  // namespace

CalibrationResult calibrate(const Dataset& ds, const std::vector<int>& fold_cal,
                            const LabelGenerator& gen, const ScoreFunction& score,
                            double alpha, double r, Rng rng) {
  require(!fold_cal.empty(), ErrorCode::EmptyFold, "calibrate: empty calibration fold");
  std::vector<Arm> labels(fold_cal.size());
  for (std::size_t j = 0; j < fold_cal.size(); ++j) {
    labels[j] = gen.assign(ds.x(fold_cal[j]));
  }
  std::string source = r >= 1.0 ? "random" : (r > 0.0 ? "mixture" : "blackbox");
  return finish_calibration(ds, fold_cal, std::move(labels), score, alpha, r,
                            std::move(source), rng);
}

CalibrationResult calibrate_oracular(const Dataset& ds, const std::vector<int>& fold_cal,
                                     const ScoreFunction& score, double alpha, Rng rng) {
  require(!fold_cal.empty(), ErrorCode::EmptyFold, "calibrate_oracular: empty fold");
  const OracleTruth& oracle = ds.oracle();
  Rng label_rng = rng.stream(Stream::kOracleLabel);
  std::vector<Arm> labels(fold_cal.size());
  for (std::size_t j = 0; j < fold_cal.size(); ++j) {
    const TreatmentSet& opt = oracle.optimal_sets[static_cast<std::size_t>(fold_cal[j])];
    labels[j] = opt.arms()[static_cast<std::size_t>(label_rng.next_int(opt.size()))];
  }
  return finish_calibration(ds, fold_cal, std::move(labels), score, alpha, 0.0,
                            "oracle", rng);
}

TreatmentSet conformal_set(const Eigen::RowVectorXd& x, const ScoreFunction& score,
                           double q_hat) {
  Eigen::VectorXd scores = score.all_arms(x);
  std::vector<Arm> members;
  for (Arm a = 0; a < score.num_arms(); ++a) {
    if (scores[a] < q_hat) members.push_back(a);  // strict, by construction
  }
  return TreatmentSet(std::move(members), score.num_arms());
}

SetValuedPolicy make_conformal_policy(ScoreFunction score, double q_hat, PolicyMeta meta) {
  SetValuedPolicy out;
  out.meta = std::move(meta);
  out.evaluate = [s = std::move(score), q_hat](const Eigen::RowVectorXd& x) {
    return conformal_set(x, s, q_hat);
  };
  return out;
}

}  // namespace svpl
