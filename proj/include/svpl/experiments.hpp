#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svpl/basis.hpp"
#include "svpl/cdf.hpp"
#include "svpl/conformal.hpp"
#include "svpl/dgp.hpp"
#include "svpl/evaluate.hpp"
#include "svpl/glb.hpp"
#include "svpl/labelgen.hpp"

namespace svpl::exp {

/// Defaults reproduce the benchmark cell: deliberately misspecified linear
/// Q-labels, a heavily smoothed knn score (imperfect, like the labels, so
/// unrepaired calibration under-covers), and low-k knn bounds for GLB whose
/// width yields the conservative, larger-than-conformal sets.
struct LearnerOptions {
  std::string labeler = "qlearn";       // qlearn | qlearn-iw
  std::string label_basis = "linear";
  std::string score_learner = "knn";    // ols | knn
  std::string score_basis = "linear";   // basis for the ols score learner
  std::string glb_learner = "knn";      // ols | knn
  std::string glb_basis = "dgp-aware";  // basis for the ols glb learner
  int knn_k = 140;                      // neighborhood for the knn score learner
  int glb_knn_k = 5;                    // neighborhood for the knn GLB bounds
  int knn_bootstrap = 200;
  bool glb_split_maxmin = true;
};

struct ExperimentConfig {
  std::vector<int> n_list = {6000, 12000, 18000};
  std::vector<double> alpha_grid;  // default 0, 0.05, ..., 1
  std::vector<double> r_grid;      // default 0, 0.1, ..., 1
  int reps = 50;
  std::vector<std::string> methods = {"ocp", "conformal", "glb"};
  LearnerOptions learners;
  std::uint64_t seed = 1;
  int threads = 1;
  int test_n = 2000;
  double frac_b = 1.0 / 3.0;
  double frac_train = 1.0 / 3.0;
  double frac_cal = 1.0 / 3.0;

  // data-generating process
  int dgp_d = 4;
  int dgp_arms = 5;
  double noise_sd = 0.5;
  bool secondary_outcome = false;
  double tie_tol = 1e-9;

  // table-1 cell
  double table1_alpha = 0.1;
  int table1_n = 6000;
  std::vector<double> table1_r = {0.0, 0.2, 0.5};

  // tradeoff demo
  std::vector<double> tradeoff_alpha_grid;  // default 0.05, ..., 0.5
  double tradeoff_r = 0.2;

  // rbar estimation
  int rbar_reps = 200;
  double rbar_alpha = 0.1;

  ExperimentConfig();

  /// Parse from JSON text; unknown keys are rejected. Throws Config errors.
  static ExperimentConfig from_json_text(const std::string& text);
};

/// Fitted artifacts of one replication: fresh train/test draw, fold split,
/// black-box labeler on the labeling fold, score model on the training fold.
struct Replication {
  int n = 0;
  int rep_index = 0;
  Dataset train;
  Dataset test;
  FoldSplit folds;
  std::shared_ptr<const LabelGenerator> labeler;
  std::shared_ptr<const ArmRegressor> score_model;
};

Replication prepare_replication(const ExperimentConfig& cfg, int n, int rep_index);

ScoreFunction empirical_score(const Replication& rep);

/// Fit bounded regressors for the GLB policy per the configured learner;
/// maxmin is fitted on the labeling fold when split_maxmin is on.
GlbPolicy fit_glb(const ExperimentConfig& cfg, const Replication& rep, double alpha);

/// One (method, alpha, r) cell evaluated on the replication's test rows.
struct CellResult {
  std::string method;
  double alpha = 0.0;
  double r = 0.0;
  double q_hat = 0.0;
  EvaluationReport report;
  std::optional<bool> fosd_holds;
};

/// Table 1 reproduction: one row per method at the configured alpha/n with
/// mean and standard error per metric across replications.
void run_table1(const ExperimentConfig& cfg, const std::string& out_csv);

/// Full grid sweep, long format: one row per method x alpha x r x n x rep.
void run_sweep(const ExperimentConfig& cfg, const std::string& out_csv);

/// Secondary-outcome tradeoff: set-policy values for both outcomes under the
/// uniform and lowest-arm choice strategies across the alpha grid.
void run_tradeoff(const ExperimentConfig& cfg, const std::string& out_csv);

/// Randomness level needed for coverage, estimated on one replication of the
/// configured labeling setup.
double run_rbar(const ExperimentConfig& cfg);

/// In-memory table-1 style evaluation, used by the acceptance suite.
std::vector<CellResult> table1_cells(const ExperimentConfig& cfg, int rep_index);

}  // namespace svpl::exp
