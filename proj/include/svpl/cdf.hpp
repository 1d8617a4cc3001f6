#pragma once

#include <vector>

#include "svpl/conformal.hpp"
#include "svpl/types.hpp"

namespace svpl {

/// Empirical CDF of a score sample: right-continuous step function on [0, 1].
class ScoreCdf {
 public:
  explicit ScoreCdf(std::vector<double> sample);

  double operator()(double t) const;
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

inline ScoreCdf empirical_cdf(std::vector<double> scores) {
  return ScoreCdf(std::move(scores));
}

/// Marginal coverage factor Delta_r(t) = F(t) - F_hat_r(t); its sign at the
/// calibrated quantile governs whether coverage transfers from perturbed to
/// true labels.
double coverage_factor(const ScoreCdf& truth_cdf, const ScoreCdf& perturbed_cdf, double t);

struct DominanceResult {
  bool holds = false;
  double max_violation = 0.0;
};

/// First-order stochastic dominance of G over H: G(t) <= H(t) on the grid.
DominanceResult check_fosd(const ScoreCdf& G, const ScoreCdf& H,
                           const std::vector<double>& grid);

/// Second-order dominance: cumulative integral of H - G stays nonnegative.
/// Evaluated exactly on the union of both samples' breakpoints.
DominanceResult check_sosd(const ScoreCdf& G, const ScoreCdf& H);

/// Breakpoint union of two CDFs, handy as a dominance-check grid.
std::vector<double> merged_grid(const ScoreCdf& G, const ScoreCdf& H);

/// Monte-Carlo estimate of the smallest randomness level that restores
/// marginal coverage: ratio of the expected noisy-vs-true CDF gap to the
/// noisy-vs-random gap, both at the calibrated quantile. Each replication
/// bootstrap-resamples the calibration fold and redraws the oracle and
/// random labels. Clamped to [0, 1]; 0 when no correction is needed.
/// Requires oracle truth.
double estimate_rbar(const Dataset& ds, const std::vector<int>& fold_cal,
                     const LabelGenerator& gen, const ScoreFunction& score,
                     double alpha, int reps, Rng rng);

}  // namespace svpl
