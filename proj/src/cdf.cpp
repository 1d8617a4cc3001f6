#include "svpl/cdf.hpp"

#include <algorithm>
#include <cmath>

#include "svpl/errors.hpp"

namespace svpl {

ScoreCdf::ScoreCdf(std::vector<double> sample) : sorted_(std::move(sample)) {
  require(!sorted_.empty(), ErrorCode::EmptyScores, "ScoreCdf: empty sample");
  for (double v : sorted_) {
    require(std::isfinite(v), ErrorCode::InvalidArgument, "ScoreCdf: non-finite score");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double ScoreCdf::operator()(double t) const {
  auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double coverage_factor(const ScoreCdf& truth_cdf, const ScoreCdf& perturbed_cdf,
                       double t) {
  return truth_cdf(t) - perturbed_cdf(t);
}

DominanceResult check_fosd(const ScoreCdf& G, const ScoreCdf& H,
                           const std::vector<double>& grid) {
  DominanceResult result;
  result.holds = true;
  for (double t : grid) {
    double gap = G(t) - H(t);  // positive means violation
    if (gap > result.max_violation) result.max_violation = gap;
    if (gap > 0.0) result.holds = false;
  }
  return result;
}

DominanceResult check_sosd(const ScoreCdf& G, const ScoreCdf& H) {
  std::vector<double> grid = merged_grid(G, H);
  DominanceResult result;
  result.holds = true;
  double integral = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    // step functions are constant on [grid[i], grid[i+1])
    integral += (H(grid[i]) - G(grid[i])) * (grid[i + 1] - grid[i]);
    worst = std::min(worst, integral);
  }
  if (worst < 0.0) {
    result.holds = false;
    result.max_violation = -worst;
  }
  return result;
}

std::vector<double> merged_grid(const ScoreCdf& G, const ScoreCdf& H) {
  std::vector<double> grid;
  grid.reserve(G.sorted().size() + H.sorted().size());
  std::merge(G.sorted().begin(), G.sorted().end(), H.sorted().begin(), H.sorted().end(),
             std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

double estimate_rbar(const Dataset& ds, const std::vector<int>& fold_cal,
                     const LabelGenerator& gen, const ScoreFunction& score,
                     double alpha, int reps, Rng rng) {
  require(reps >= 1, ErrorCode::InvalidArgument, "estimate_rbar: reps must be positive");
  require(!fold_cal.empty(), ErrorCode::EmptyFold, "estimate_rbar: empty fold");
  const OracleTruth& oracle = ds.oracle();
  const int K = ds.num_arms();
  const int m = static_cast<int>(fold_cal.size());

  // Noisy labels and their per-row scores are deterministic given the fitted
  // generator; precompute once.
  std::vector<double> noisy_scores(static_cast<std::size_t>(m));
  std::vector<Eigen::VectorXd> all_scores(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const Eigen::RowVectorXd x = ds.x(fold_cal[static_cast<std::size_t>(j)]);
    all_scores[static_cast<std::size_t>(j)] = score.all_arms(x);
    Arm noisy = gen.assign(x);
    noisy_scores[static_cast<std::size_t>(j)] = all_scores[static_cast<std::size_t>(j)][noisy];
  }

  Rng boot_rng = rng.stream(21);
  Rng oracle_rng = rng.stream(22);
  Rng random_rng = rng.stream(23);

  double numerator = 0.0;
  double denominator = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<double> noisy_rep(static_cast<std::size_t>(m));
    std::vector<double> truth_rep(static_cast<std::size_t>(m));
    std::vector<double> random_rep(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      const int pick = boot_rng.next_int(m);
      const int row = fold_cal[static_cast<std::size_t>(pick)];
      const auto& scores_row = all_scores[static_cast<std::size_t>(pick)];
      noisy_rep[static_cast<std::size_t>(j)] = noisy_scores[static_cast<std::size_t>(pick)];
      const TreatmentSet& opt = oracle.optimal_sets[static_cast<std::size_t>(row)];
      Arm truth_arm = opt.arms()[static_cast<std::size_t>(oracle_rng.next_int(opt.size()))];
      truth_rep[static_cast<std::size_t>(j)] = scores_row[truth_arm];
      random_rep[static_cast<std::size_t>(j)] = scores_row[random_rng.next_int(K)];
    }
    const double q_hat = conformal_quantile(noisy_rep, alpha);
    ScoreCdf noisy_cdf(std::move(noisy_rep));
    ScoreCdf truth_cdf(std::move(truth_rep));
    ScoreCdf random_cdf(std::move(random_rep));
    numerator += noisy_cdf(q_hat) - truth_cdf(q_hat);
    denominator += noisy_cdf(q_hat) - random_cdf(q_hat);
  }
  numerator /= reps;
  denominator /= reps;

  require(std::abs(denominator) >= 1e-12, ErrorCode::DegenerateDenominator,
          "estimate_rbar: noisy and random score CDFs coincide at the quantile");
  if (numerator <= 0.0) return 0.0;
  return std::clamp(numerator / denominator, 0.0, 1.0);
}

}  // namespace svpl
