#include "svpl/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svpl/errors.hpp"

namespace svpl {
namespace {

double row_mean_over_set(const TreatmentSet& set, const Eigen::MatrixXd& mu, int i) {
  if (set.empty()) return mu.row(i).mean();  // uniform fallback over all arms
  double total = 0.0;
  for (Arm a : set.arms()) total += mu(i, a);
  return total / static_cast<double>(set.size());
}

}  // namespace

Arm choose_uniform(const TreatmentSet& set, Rng& rng) {
  require(!set.empty(), ErrorCode::EmptySet, "choose_uniform: empty set");
  return set.arms()[static_cast<std::size_t>(rng.next_int(set.size()))];
}

Arm choose_lower(const TreatmentSet& set) {
  require(!set.empty(), ErrorCode::EmptySet, "choose_lower: empty set");
  return set.lowest();
}

ChoiceFunction uniform_choice() {
  return {"uniform", [](const TreatmentSet& set, const Eigen::RowVectorXd&, Rng& rng) {
            return choose_uniform(set, rng);
          }};
}

ChoiceFunction lower_choice() {
  return {"lower", [](const TreatmentSet& set, const Eigen::RowVectorXd&, Rng&) {
            return choose_lower(set);
          }};
}

CoveragePair coverage(const std::vector<TreatmentSet>& sets,
                      const std::vector<TreatmentSet>& truth) {
  require(sets.size() == truth.size(), ErrorCode::LengthMismatch,
          "coverage: sets and truth differ in length");
  require(!sets.empty(), ErrorCode::InvalidArgument, "coverage: empty input");
  CoveragePair out;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    require(!truth[i].empty(), ErrorCode::EmptyTruth, "coverage: empty truth set");
    int common = truth[i].intersection_size(sets[i]);
    out.prop += static_cast<double>(common) / static_cast<double>(truth[i].size());
    out.hit += common > 0 ? 1.0 : 0.0;
  }
  out.prop /= static_cast<double>(sets.size());
  out.hit /= static_cast<double>(sets.size());
  return out;
}

double spv_uniform(const std::vector<TreatmentSet>& sets, const Eigen::MatrixXd& mu) {
  require(static_cast<Eigen::Index>(sets.size()) == mu.rows(), ErrorCode::LengthMismatch,
          "spv_uniform: row mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    total += row_mean_over_set(sets[i], mu, static_cast<int>(i));
  }
  return total / static_cast<double>(sets.size());
}

double spv_lower(const std::vector<TreatmentSet>& sets, const Eigen::MatrixXd& mu) {
  require(static_cast<Eigen::Index>(sets.size()) == mu.rows(), ErrorCode::LengthMismatch,
          "spv_lower: row mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    total += sets[i].empty() ? mu.row(static_cast<int>(i)).mean()
                             : mu(static_cast<int>(i), sets[i].lowest());
  }
  return total / static_cast<double>(sets.size());
}

double spv_best_in_set(const std::vector<TreatmentSet>& sets, const Eigen::MatrixXd& mu) {
  require(static_cast<Eigen::Index>(sets.size()) == mu.rows(), ErrorCode::LengthMismatch,
          "spv_best_in_set: row mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].empty()) {
      total += mu.row(static_cast<int>(i)).mean();
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (Arm a : sets[i].arms()) best = std::max(best, mu(static_cast<int>(i), a));
    total += best;
  }
  return total / static_cast<double>(sets.size());
}

double set_policy_value_mc(const std::vector<TreatmentSet>& sets,
                           const Eigen::MatrixXd& X, const Eigen::MatrixXd& mu,
                           const ChoiceFunction& choice, Rng& rng, int mc_draws) {
  require(mc_draws >= 1, ErrorCode::InvalidArgument, "set_policy_value_mc: draws < 1");
  require(static_cast<Eigen::Index>(sets.size()) == mu.rows(), ErrorCode::LengthMismatch,
          "set_policy_value_mc: row mismatch");
  double total = 0.0;
  for (int draw = 0; draw < mc_draws; ++draw) {
    for (std::size_t i = 0; i < sets.size(); ++i) {
      Arm a;
      if (sets[i].empty()) {
        a = static_cast<Arm>(rng.next_int(static_cast<int>(mu.cols())));
      } else {
        a = choice.choose(sets[i], X.row(static_cast<Eigen::Index>(i)), rng);
      }
      total += mu(static_cast<int>(i), a);
    }
  }
  return total / (static_cast<double>(mc_draws) * static_cast<double>(sets.size()));
}

EvaluationReport evaluate_cell(const std::vector<TreatmentSet>& sets,
                               const Dataset& eval_ds,
                               std::optional<double> delta_at_qhat) {
  require(static_cast<int>(sets.size()) == eval_ds.rows(), ErrorCode::LengthMismatch,
          "evaluate_cell: sets and rows differ");
  const OracleTruth& oracle = eval_ds.oracle();

  EvaluationReport report;
  CoveragePair overall = coverage(sets, oracle.optimal_sets);
  report.coverage_hit = overall.hit;
  report.coverage_prop = overall.prop;

  double hits_low = 0.0, hits_high = 0.0;
  int n_low = 0, n_high = 0;
  double card = 0.0, empties = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto idx = static_cast<int>(i);
    const bool low_region = eval_ds.X()(idx, 0) + eval_ds.X()(idx, 1) < 0.5;
    const bool hit = oracle.optimal_sets[i].intersects(sets[i]);
    if (low_region) {
      ++n_low;
      hits_low += hit ? 1.0 : 0.0;
    } else {
      ++n_high;
      hits_high += hit ? 1.0 : 0.0;
    }
    card += sets[i].size();
    empties += sets[i].empty() ? 1.0 : 0.0;
  }
  report.cov_region_12 = n_low > 0 ? hits_low / n_low : std::numeric_limits<double>::quiet_NaN();
  report.cov_region_34 = n_high > 0 ? hits_high / n_high : std::numeric_limits<double>::quiet_NaN();
  report.mean_cardinality = card / static_cast<double>(sets.size());
  report.empty_fraction = empties / static_cast<double>(sets.size());
  report.spv_uniform = spv_uniform(sets, oracle.mu);
  report.spv_lower = spv_lower(sets, oracle.mu);
  report.delta_at_qhat = delta_at_qhat;
  return report;
}

}  // namespace svpl
