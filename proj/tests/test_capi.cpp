#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "svpl.h"

namespace {

struct Handle {
  svpl_dataset* ptr = nullptr;
  ~Handle() { svpl_dataset_free(ptr); }
};

bool file_exists(const std::string& path) {
  std::ifstream in(path);
  return static_cast<bool>(in);
}

std::string first_line(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("simulate exposes dataset dimensions through the handle") {
  Handle ds;
  REQUIRE(svpl_simulate(R"({"n": 500, "seed": 3})", &ds.ptr) == SVPL_OK);
  CHECK(svpl_dataset_num_rows(ds.ptr) == 500);
  CHECK(svpl_dataset_num_covariates(ds.ptr) == 4);
  CHECK(svpl_dataset_num_arms(ds.ptr) == 5);
  CHECK(svpl_dataset_has_oracle(ds.ptr) == 1);
}

TEST_CASE("config errors are reported with messages") {
  Handle ds;
  CHECK(svpl_simulate("{not json", &ds.ptr) == SVPL_ERR_CONFIG);
  CHECK(std::strlen(svpl_last_error()) > 0);
  CHECK(svpl_simulate(R"({"bogus": 1})", &ds.ptr) == SVPL_ERR_CONFIG);
  CHECK(svpl_simulate(R"({"n": 10})", nullptr) == SVPL_ERR_INVALID_ARGUMENT);
  svpl_dataset* out = nullptr;
  CHECK(svpl_dataset_read_csv("does_not_exist.csv", nullptr, &out) == SVPL_ERR_IO);
}

TEST_CASE("csv round trip preserves shapes and oracle truth") {
  Handle ds;
  REQUIRE(svpl_simulate(R"({"n": 300, "seed": 11, "secondary_outcome": true})",
                        &ds.ptr) == SVPL_OK);
  REQUIRE(svpl_dataset_write_csv(ds.ptr, "capi_data.csv", "capi_data.oracle.csv") ==
          SVPL_OK);

  Handle back;
  REQUIRE(svpl_dataset_read_csv("capi_data.csv", "capi_data.oracle.csv", &back.ptr) ==
          SVPL_OK);
  CHECK(svpl_dataset_num_rows(back.ptr) == 300);
  CHECK(svpl_dataset_num_arms(back.ptr) == 5);
  CHECK(svpl_dataset_has_oracle(back.ptr) == 1);

  std::remove("capi_data.csv");
  std::remove("capi_data.oracle.csv");
}

TEST_CASE("glb and conformal runs write sets, meta, and diagnostics") {
  Handle ds;
  REQUIRE(svpl_simulate(R"({"n": 1500, "seed": 13})", &ds.ptr) == SVPL_OK);

  REQUIRE(svpl_run_glb(ds.ptr, nullptr,
                       R"({"alpha": 0.1, "learner": "ols", "basis": "dgp-aware"})",
                       "capi_glb.csv") == SVPL_OK);
  CHECK(first_line("capi_glb.csv") ==
        "row,member_1,member_2,member_3,member_4,member_5,cardinality");
  CHECK(file_exists("capi_glb.csv.meta.json"));

  REQUIRE(svpl_run_conformal(ds.ptr, nullptr,
                             R"({"alpha": 0.1, "r": 0.2, "diagnostics": true,
                                 "rbar_reps": 25})",
                             "capi_conf.csv") == SVPL_OK);
  CHECK(file_exists("capi_conf.csv.meta.json"));
  CHECK(first_line("capi_conf.csv.diag.csv") ==
        "alpha,r,q_hat,delta_at_qhat,fosd_holds,rbar_estimate");

  REQUIRE(svpl_evaluate(ds.ptr, "capi_conf.csv", "capi_conf.csv.meta.json",
                        "capi_report.csv") == SVPL_OK);
  CHECK(first_line("capi_report.csv") ==
        "method,alpha,r,coverage_hit,coverage_prop,cov_region_12,cov_region_34,"
        "mean_card,empty_frac,spv_uniform,spv_lower,delta_at_qhat");

  double rbar = -1.0;
  REQUIRE(svpl_estimate_rbar(ds.ptr, R"({"alpha": 0.1, "reps": 30})", &rbar) == SVPL_OK);
  CHECK(rbar >= 0.0);
  CHECK(rbar <= 1.0);

  for (const char* f : {"capi_glb.csv", "capi_glb.csv.meta.json", "capi_conf.csv",
                        "capi_conf.csv.meta.json", "capi_conf.csv.diag.csv",
                        "capi_report.csv"}) {
    std::remove(f);
  }
}

TEST_CASE("experiment drivers run from config json") {
  const char* cfg = R"({
    "seed": 5, "reps": 2, "test_n": 120,
    "n_list": [1200], "alpha_grid": [0.1, 0.5], "r_grid": [0.0, 0.5],
    "table1": {"n": 1200, "alpha": 0.1, "r_values": [0.0, 0.5]},
    "learners": {"score_learner": "ols", "glb_learner": "ols"}
  })";
  REQUIRE(svpl_run_table1(cfg, "capi_table1.csv") == SVPL_OK);
  CHECK(file_exists("capi_table1.csv"));
  CHECK(svpl_run_table1(R"({"oops": 1})", "x.csv") == SVPL_ERR_CONFIG);

  double rbar = -1.0;
  const char* rbar_cfg = R"({
    "seed": 5, "table1": {"n": 1200}, "rbar": {"reps": 30, "alpha": 0.1},
    "learners": {"score_learner": "ols"}
  })";
  REQUIRE(svpl_run_rbar(rbar_cfg, &rbar) == SVPL_OK);
  CHECK(rbar >= 0.0);
  CHECK(rbar <= 1.0);

  REQUIRE(svpl_render_plot(R"({
    "input": "capi_table1.csv", "kind": "line",
    "x": "r", "y": "coverage_hit_mean", "series": ["method"]
  })",
                           "capi_plot.svg") == SVPL_OK);
  CHECK(file_exists("capi_plot.svg"));
  CHECK(svpl_render_plot(R"({"kind": "line"})", "x.svg") == SVPL_ERR_CONFIG);

  std::remove("capi_table1.csv");
  std::remove("capi_table1.csv.reps.csv");
  std::remove("capi_plot.svg");
}
