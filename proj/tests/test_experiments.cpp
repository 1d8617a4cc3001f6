#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "svpl/csv.hpp"
#include "svpl/experiments.hpp"

using namespace svpl;
using svpl::exp::ExperimentConfig;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tmp_path(const std::string& name) {
  return "exp_test_" + name;
}

// Small but statistically nondegenerate configuration for smoke runs; the
// default knn score needs n=6000-scale folds, so these use the ols learners.
ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.seed = 5;
  cfg.reps = 2;
  cfg.test_n = 150;
  cfg.n_list = {1200};
  cfg.table1_n = 1200;
  cfg.alpha_grid = {0.0, 0.1, 0.5, 1.0};
  cfg.r_grid = {0.0, 0.5};
  cfg.learners.score_learner = "ols";
  cfg.learners.glb_learner = "ols";
  cfg.learners.glb_basis = "dgp-aware";
  return cfg;
}

double cell_as_double(const csv::Table& t, std::size_t row, const std::string& col) {
  int c = t.column(col);
  REQUIRE(c >= 0);
  return std::stod(t.rows[row][static_cast<std::size_t>(c)]);
}

std::string cell(const csv::Table& t, std::size_t row, const std::string& col) {
  int c = t.column(col);
  REQUIRE(c >= 0);
  return t.rows[row][static_cast<std::size_t>(c)];
}

}  // namespace

TEST_CASE("experiment config defaults and validation") {
  ExperimentConfig def = ExperimentConfig::from_json_text("{}");
  CHECK(def.alpha_grid.size() == 21);
  CHECK(def.alpha_grid.front() == doctest::Approx(0.0));
  CHECK(def.alpha_grid.back() == doctest::Approx(1.0));
  CHECK(def.r_grid.size() == 11);
  CHECK(def.reps == 50);
  CHECK(def.n_list == std::vector<int>{6000, 12000, 18000});
  CHECK(def.table1_r == std::vector<double>{0.0, 0.2, 0.5});

  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"unknown_key": 1})"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"methods": ["bogus"]})"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"reps": 0})"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"alpha_grid": [1.5]})"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"fractions": [0.5, 0.5]})"),
                  Error);

  ExperimentConfig custom = ExperimentConfig::from_json_text(
      R"({"seed": 9, "methods": ["glb"], "learners": {"glb_learner": "ols"}})");
  CHECK(custom.seed == 9);
  CHECK(custom.methods == std::vector<std::string>{"glb"});
}

TEST_CASE("replications are reproducible and respect fold hygiene") {
  ExperimentConfig cfg = tiny_config();
  exp::Replication r1 = exp::prepare_replication(cfg, cfg.table1_n, 0);
  exp::Replication r2 = exp::prepare_replication(cfg, cfg.table1_n, 0);
  CHECK(r1.train.X() == r2.train.X());
  CHECK(r1.test.X() == r2.test.X());
  CHECK(r1.folds.idx_cal == r2.folds.idx_cal);

  exp::Replication other = exp::prepare_replication(cfg, cfg.table1_n, 1);
  CHECK(r1.train.X() != other.train.X());

  // labeler must assign the same arm for the same covariates
  Eigen::RowVectorXd x = r1.test.x(0);
  CHECK(r1.labeler->assign(x) == r2.labeler->assign(x));
}

TEST_CASE("table1 runner emits one aggregated row per method cell") {
  ExperimentConfig cfg = tiny_config();
  std::string out = tmp_path("table1.csv");
  exp::run_table1(cfg, out);
  csv::Table t = csv::read_table(out);

  CHECK(t.columns ==
        std::vector<std::string>{
            "method", "alpha", "r", "n", "reps", "coverage_hit_mean",
            "coverage_hit_se", "coverage_prop_mean", "coverage_prop_se",
            "cov_region_12_mean", "cov_region_12_se", "cov_region_34_mean",
            "cov_region_34_se", "mean_card_mean", "mean_card_se", "empty_frac_mean",
            "empty_frac_se", "spv_uniform_mean", "spv_uniform_se", "spv_lower_mean",
            "spv_lower_se"});

  // ocp + three conformal r values + glb
  CHECK(t.rows.size() == 5);
  CHECK(cell(t, 0, "method") == "ocp");
  CHECK(cell(t, 1, "method") == "conformal");
  CHECK(cell(t, 4, "method") == "glb");
  CHECK(cell_as_double(t, 1, "r") == doctest::Approx(0.0));
  CHECK(cell_as_double(t, 2, "r") == doctest::Approx(0.2));
  CHECK(cell_as_double(t, 3, "r") == doctest::Approx(0.5));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    double cov = cell_as_double(t, i, "coverage_hit_mean");
    CHECK(cov >= 0.0);
    CHECK(cov <= 1.0);
    CHECK(cell_as_double(t, i, "mean_card_mean") <= 5.0);
  }

  // per-replication sidecar: one row per cell per rep, consistent with the
  // aggregate (mean over the sidecar equals the reported mean)
  csv::Table reps = csv::read_table(out + ".reps.csv");
  CHECK(reps.rows.size() == 5 * 2);
  double hit_sum = 0.0;
  for (std::size_t i = 0; i < reps.rows.size(); ++i) {
    if (cell(reps, i, "method") == "ocp") hit_sum += cell_as_double(reps, i, "coverage_hit");
  }
  CHECK(hit_sum / 2.0 == doctest::Approx(cell_as_double(t, 0, "coverage_hit_mean")));

  std::remove(out.c_str());
  std::remove((out + ".reps.csv").c_str());
}

TEST_CASE("sweep runner covers the grid and hits the alpha edges") {
  ExperimentConfig cfg = tiny_config();
  std::string out = tmp_path("sweep.csv");
  exp::run_sweep(cfg, out);
  csv::Table t = csv::read_table(out);

  CHECK(t.columns ==
        std::vector<std::string>{"method", "n", "alpha", "r", "rep", "q_hat",
                                 "coverage_hit", "coverage_prop", "cov_region_12",
                                 "cov_region_34", "mean_card", "empty_frac",
                                 "spv_uniform", "spv_lower", "delta_at_qhat",
                                 "fosd_holds"});
  // per rep: ocp 4 alphas + conformal 2r x 4alpha + glb 4 alphas = 16
  CHECK(t.rows.size() == 2 * 16);

  int checked_zero = 0, checked_one = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string method = cell(t, i, "method");
    double alpha = cell_as_double(t, i, "alpha");
    if (method == "glb") continue;
    if (alpha == 0.0) {
      CHECK(cell_as_double(t, i, "mean_card") == doctest::Approx(5.0));
      ++checked_zero;
    }
    if (alpha == 1.0) {
      CHECK(cell_as_double(t, i, "mean_card") == doctest::Approx(0.0));
      CHECK(cell_as_double(t, i, "empty_frac") == doctest::Approx(1.0));
      ++checked_one;
    }
  }
  CHECK(checked_zero == 2 * 3);  // ocp + two conformal rows per rep
  CHECK(checked_one == 2 * 3);
  std::remove(out.c_str());
}

TEST_CASE("sweep output is byte-identical across reruns") {
  ExperimentConfig cfg = tiny_config();
  cfg.alpha_grid = {0.1, 0.5};
  std::string out1 = tmp_path("sweep_a.csv");
  std::string out2 = tmp_path("sweep_b.csv");
  exp::run_sweep(cfg, out1);
  exp::run_sweep(cfg, out2);
  CHECK(slurp(out1) == slurp(out2));

  // thread fan-out must not change the bytes either
  ExperimentConfig threaded = cfg;
  threaded.threads = 2;
  std::string out3 = tmp_path("sweep_c.csv");
  exp::run_sweep(threaded, out3);
  CHECK(slurp(out1) == slurp(out3));

  std::remove(out1.c_str());
  std::remove(out2.c_str());
  std::remove(out3.c_str());
}

TEST_CASE("cached glb path reproduces the direct construction") {
  ExperimentConfig cfg = tiny_config();
  cfg.methods = {"glb"};
  std::vector<exp::CellResult> cells = exp::table1_cells(cfg, 0);
  REQUIRE(cells.size() == 1);

  exp::Replication rep = exp::prepare_replication(cfg, cfg.table1_n, 0);
  GlbPolicy policy = exp::fit_glb(cfg, rep, cfg.table1_alpha);
  std::vector<TreatmentSet> direct;
  for (int i = 0; i < rep.test.rows(); ++i) direct.push_back(glb_set(rep.test.x(i), policy));
  EvaluationReport ref = evaluate_cell(direct, rep.test);

  CHECK(cells[0].report.coverage_hit == doctest::Approx(ref.coverage_hit));
  CHECK(cells[0].report.mean_cardinality == doctest::Approx(ref.mean_cardinality));
  CHECK(cells[0].report.spv_uniform == doctest::Approx(ref.spv_uniform));
}

TEST_CASE("tradeoff runner needs the secondary outcome and orders xi") {
  ExperimentConfig cfg = tiny_config();
  cfg.methods = {"conformal"};
  cfg.tradeoff_alpha_grid = {0.1, 0.3};

  std::string out = tmp_path("tradeoff.csv");
  CHECK_THROWS_AS(exp::run_tradeoff(cfg, out), Error);  // secondary off

  cfg.secondary_outcome = true;
  exp::run_tradeoff(cfg, out);
  csv::Table t = csv::read_table(out);
  CHECK(t.rows.size() == 4);  // 2 alphas x {uniform, lower}
  for (std::size_t i = 0; i + 1 < t.rows.size(); i += 2) {
    CHECK(cell(t, i, "delta") == "uniform");
    CHECK(cell(t, i + 1, "delta") == "lower");
    double xi_unif = cell_as_double(t, i, "spv_xi_mean");
    double xi_lower = cell_as_double(t, i + 1, "spv_xi_mean");
    CHECK(xi_lower <= xi_unif + 1e-9);
  }
  std::remove(out.c_str());
}

TEST_CASE("rbar runner returns a level inside the unit interval") {
  ExperimentConfig cfg = tiny_config();
  cfg.rbar_reps = 40;
  double rbar = exp::run_rbar(cfg);
  CHECK(rbar >= 0.0);
  CHECK(rbar <= 1.0);
}
