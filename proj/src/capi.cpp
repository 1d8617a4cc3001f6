#include "svpl.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "svpl/cdf.hpp"
#include "svpl/conformal.hpp"
#include "svpl/csv.hpp"
#include "svpl/dgp.hpp"
#include "svpl/evaluate.hpp"
#include "svpl/experiments.hpp"
#include "svpl/glb.hpp"
#include "svpl/labelgen.hpp"
#include "svpl/plot.hpp"

using nlohmann::json;

struct svpl_dataset {
  svpl::Dataset data;
};

namespace {

thread_local std::string g_last_error;

svpl_status status_for(svpl::ErrorCode code) {
  using svpl::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::LengthMismatch:
    case ErrorCode::EmptySet:
    case ErrorCode::EmptyScores:
    case ErrorCode::EmptyTruth:
      return SVPL_ERR_INVALID_ARGUMENT;
    case ErrorCode::Config: return SVPL_ERR_CONFIG;
    case ErrorCode::Io: return SVPL_ERR_IO;
    case ErrorCode::Numerical: return SVPL_ERR_NUMERICAL;
    case ErrorCode::EmptyFold: return SVPL_ERR_EMPTY_FOLD;
    case ErrorCode::ArmUnderflow: return SVPL_ERR_ARM_UNDERFLOW;
    case ErrorCode::OracleRequired: return SVPL_ERR_ORACLE_REQUIRED;
    case ErrorCode::DegenerateDenominator: return SVPL_ERR_DEGENERATE_DENOMINATOR;
    case ErrorCode::Internal: return SVPL_ERR_INTERNAL;
  }
  return SVPL_ERR_INTERNAL;
}

template <typename Fn>
svpl_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SVPL_OK;
  } catch (const svpl::Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SVPL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SVPL_ERR_INTERNAL;
  }
}

void require_arg(bool ok, const char* message) {
  svpl::require(ok, svpl::ErrorCode::InvalidArgument, message);
}

json parse_json(const char* text, const char* what) {
  if (text == nullptr || std::strlen(text) == 0) return json::object();
  try {
    return json::parse(text);
  } catch (const std::exception& e) {
    svpl::raise(svpl::ErrorCode::Config,
                std::string(what) + ": invalid JSON: " + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* scope) {
  svpl::require(j.is_object(), svpl::ErrorCode::Config,
                std::string(scope) + " options must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    svpl::require(known, svpl::ErrorCode::Config,
                  std::string(scope) + ": unknown option '" + item.key() + "'");
  }
}

struct SplitOptions {
  double frac_b = 1.0 / 3.0;
  double frac_train = 1.0 / 3.0;
  double frac_cal = 1.0 / 3.0;
  std::uint64_t seed = 1;
};

SplitOptions split_options(const json& j) {
  SplitOptions opt;
  if (j.contains("fractions")) {
    auto f = j["fractions"].get<std::vector<double>>();
    svpl::require(f.size() == 3, svpl::ErrorCode::Config,
                  "fractions needs three entries");
    opt.frac_b = f[0];
    opt.frac_train = f[1];
    opt.frac_cal = f[2];
  }
  if (j.contains("seed")) opt.seed = j["seed"].get<std::uint64_t>();
  return opt;
}

std::shared_ptr<const svpl::ArmRegressor> fit_score_model(
    const svpl::Dataset& ds, const std::vector<int>& fold, const json& j,
    std::uint64_t seed) {
  const std::string learner = j.value("score_learner", std::string("ols"));
  const svpl::BasisSpec basis =
      svpl::BasisSpec::from_name(j.value("score_basis", std::string("linear")));
  if (learner == "ols") return svpl::OlsArmRegressor::fit(ds, fold, basis);
  if (learner == "knn") {
    return svpl::KnnBootstrapRegressor::fit(ds, fold, j.value("knn_k", 50),
                                            j.value("knn_bootstrap", 200),
                                            svpl::Rng(seed, 77));
  }
  svpl::raise(svpl::ErrorCode::Config, "unknown score learner '" + learner + "'");
}

std::shared_ptr<const svpl::LabelGenerator> fit_labeler(const svpl::Dataset& ds,
                                                        const std::vector<int>& fold,
                                                        const json& j) {
  const std::string labeler = j.value("labeler", std::string("qlearn"));
  const svpl::BasisSpec basis =
      svpl::BasisSpec::from_name(j.value("label_basis", std::string("linear")));
  svpl::require(labeler == "qlearn" || labeler == "qlearn-iw", svpl::ErrorCode::Config,
                "unknown labeler '" + labeler + "'");
  return svpl::QLearningLabelGenerator::fit(ds, fold, basis, labeler == "qlearn-iw");
}

std::vector<svpl::TreatmentSet> evaluate_policy(const svpl::SetValuedPolicy& policy,
                                                const svpl::Dataset& rows) {
  std::vector<svpl::TreatmentSet> sets;
  sets.reserve(static_cast<std::size_t>(rows.rows()));
  for (int i = 0; i < rows.rows(); ++i) sets.push_back(policy.evaluate(rows.x(i)));
  return sets;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  svpl::require(static_cast<bool>(out), svpl::ErrorCode::Io,
                "cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace

extern "C" {

const char* svpl_version(void) { return "0.1.0"; }

const char* svpl_last_error(void) { return g_last_error.c_str(); }

svpl_status svpl_simulate(const char* config_json, svpl_dataset** out) {
  return guarded([&] {
    require_arg(out != nullptr, "svpl_simulate: out is null");
    json j = parse_json(config_json, "simulate");
    check_keys(j, {"n", "d", "arms", "noise_sd", "seed", "secondary_outcome", "tie_tol"},
               "simulate");
    svpl::dgp::SyntheticConfig cfg;
    if (j.contains("n")) cfg.n = j["n"].get<int>();
    if (j.contains("d")) cfg.d = j["d"].get<int>();
    if (j.contains("arms")) cfg.num_arms = j["arms"].get<int>();
    if (j.contains("noise_sd")) cfg.noise_sd = j["noise_sd"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("secondary_outcome"))
      cfg.secondary_outcome = j["secondary_outcome"].get<bool>();
    if (j.contains("tie_tol")) cfg.tie_tol = j["tie_tol"].get<double>();
    svpl::require(cfg.num_arms == 5, svpl::ErrorCode::Config,
                  "simulate: the benchmark defines five arms");
    *out = new svpl_dataset{svpl::dgp::generate(cfg)};
  });
}

svpl_status svpl_dataset_read_csv(const char* data_path, const char* oracle_path,
                                  svpl_dataset** out) {
  return guarded([&] {
    require_arg(data_path != nullptr && out != nullptr,
                "svpl_dataset_read_csv: null argument");
    std::optional<std::string> oracle;
    if (oracle_path != nullptr && std::strlen(oracle_path) > 0) oracle = oracle_path;
    *out = new svpl_dataset{svpl::csv::read_dataset(data_path, oracle)};
  });
}

svpl_status svpl_dataset_write_csv(const svpl_dataset* ds, const char* data_path,
                                   const char* oracle_path) {
  return guarded([&] {
    require_arg(ds != nullptr && data_path != nullptr,
                "svpl_dataset_write_csv: null argument");
    std::optional<std::string> oracle;
    if (oracle_path != nullptr && std::strlen(oracle_path) > 0) oracle = oracle_path;
    svpl::csv::write_dataset(ds->data, data_path, oracle);
  });
}

int64_t svpl_dataset_num_rows(const svpl_dataset* ds) {
  return ds ? ds->data.rows() : -1;
}

int32_t svpl_dataset_num_covariates(const svpl_dataset* ds) {
  return ds ? ds->data.covariates() : -1;
}

int32_t svpl_dataset_num_arms(const svpl_dataset* ds) {
  return ds ? ds->data.num_arms() : -1;
}

int32_t svpl_dataset_has_oracle(const svpl_dataset* ds) {
  return ds ? (ds->data.has_oracle() ? 1 : 0) : -1;
}

void svpl_dataset_free(svpl_dataset* ds) { delete ds; }

svpl_status svpl_run_glb(const svpl_dataset* ds, const svpl_dataset* eval,
                         const char* options_json, const char* out_sets_csv) {
  return guarded([&] {
    require_arg(ds != nullptr && out_sets_csv != nullptr, "svpl_run_glb: null argument");
    json j = parse_json(options_json, "run_glb");
    check_keys(j, {"alpha", "learner", "basis", "knn_k", "knn_bootstrap", "split_maxmin",
                   "fractions", "seed"},
               "run_glb");
    const double alpha = j.value("alpha", 0.1);
    const std::string learner = j.value("learner", std::string("ols"));
    const svpl::BasisSpec basis =
        svpl::BasisSpec::from_name(j.value("basis", std::string("dgp-aware")));
    const bool split_maxmin = j.value("split_maxmin", true);
    SplitOptions split = split_options(j);

    svpl::Rng split_rng(split.seed, 3);
    svpl::FoldSplit folds = svpl::split_three_way(ds->data, split.frac_b,
                                                  split.frac_train, split.frac_cal,
                                                  split_rng);

    auto fit_on = [&](const std::vector<int>& fold, std::uint64_t stream)
        -> std::shared_ptr<const svpl::BoundedArmRegressor> {
      if (learner == "ols") return svpl::OlsArmRegressor::fit(ds->data, fold, basis);
      if (learner == "knn") {
        return svpl::KnnBootstrapRegressor::fit(ds->data, fold, j.value("knn_k", 50),
                                                j.value("knn_bootstrap", 200),
                                                svpl::Rng(split.seed, stream));
      }
      svpl::raise(svpl::ErrorCode::Config, "unknown glb learner '" + learner + "'");
    };

    svpl::GlbPolicy policy;
    policy.alpha = alpha;
    policy.bounds = fit_on(folds.idx_train, 31);
    if (split_maxmin) policy.maxmin = fit_on(folds.idx_b, 32);

    const svpl::Dataset& rows = eval ? eval->data : ds->data;
    auto sets = evaluate_policy(svpl::make_glb_policy(policy), rows);
    svpl::csv::write_sets(sets, ds->data.num_arms(), out_sets_csv);

    json meta{{"method", "glb"},
              {"alpha", alpha},
              {"r", 0.0},
              {"learner", learner},
              {"basis", basis.name()},
              {"split_maxmin", split_maxmin}};
    write_json_file(meta, std::string(out_sets_csv) + ".meta.json");
  });
}

svpl_status svpl_run_conformal(const svpl_dataset* ds, const svpl_dataset* eval,
                               const char* options_json, const char* out_sets_csv) {
  return guarded([&] {
    require_arg(ds != nullptr && out_sets_csv != nullptr,
                "svpl_run_conformal: null argument");
    json j = parse_json(options_json, "run_conformal");
    check_keys(j, {"alpha", "r", "labeler", "label_basis", "score_learner", "score_basis",
                   "knn_k", "knn_bootstrap", "fractions", "seed", "diagnostics",
                   "rbar_reps"},
               "run_conformal");
    const double alpha = j.value("alpha", 0.1);
    const double r = j.value("r", 0.0);
    const bool diagnostics = j.value("diagnostics", false);
    SplitOptions split = split_options(j);

    svpl::Rng split_rng(split.seed, 3);
    svpl::FoldSplit folds = svpl::split_three_way(ds->data, split.frac_b,
                                                  split.frac_train, split.frac_cal,
                                                  split_rng);

    auto labeler = fit_labeler(ds->data, folds.idx_b, j);
    auto score_model = fit_score_model(ds->data, folds.idx_train, j, split.seed);
    svpl::ScoreFunction score = svpl::ScoreFunction::empirical(score_model);

    svpl::CalibrationResult cal = svpl::calibrate(ds->data, folds.idx_cal, *labeler,
                                                  score, alpha, r,
                                                  svpl::Rng(split.seed, 5));

    const svpl::Dataset& rows = eval ? eval->data : ds->data;
    svpl::PolicyMeta pm{"conformal", alpha, r, cal.label_source};
    auto sets = evaluate_policy(svpl::make_conformal_policy(score, cal.q_hat, pm), rows);
    svpl::csv::write_sets(sets, ds->data.num_arms(), out_sets_csv);

    json meta{{"method", "conformal"}, {"alpha", alpha},
              {"r", r},                {"q_hat", cal.q_hat},
              {"label_source", cal.label_source}};

    if (diagnostics) {
      const svpl::OracleTruth& oracle = ds->data.oracle();
      svpl::Rng diag_rng(split.seed, 6);
      svpl::Rng oracle_rng = diag_rng.stream(1);
      svpl::Rng random_rng = diag_rng.stream(2);
      const auto& fold = folds.idx_cal;
      std::vector<double> truth_scores(fold.size());
      std::vector<double> noisy_scores(fold.size());
      std::vector<double> random_scores(fold.size());
      for (std::size_t i = 0; i < fold.size(); ++i) {
        const Eigen::RowVectorXd x = ds->data.x(fold[i]);
        Eigen::VectorXd s = score.all_arms(x);
        const svpl::TreatmentSet& opt =
            oracle.optimal_sets[static_cast<std::size_t>(fold[i])];
        truth_scores[i] =
            s[opt.arms()[static_cast<std::size_t>(oracle_rng.next_int(opt.size()))]];
        noisy_scores[i] = s[labeler->assign(x)];
        random_scores[i] = s[random_rng.next_int(ds->data.num_arms())];
      }
      svpl::ScoreCdf truth_cdf(truth_scores);
      svpl::ScoreCdf noisy_cdf(noisy_scores);
      svpl::ScoreCdf random_cdf(random_scores);
      svpl::ScoreCdf perturbed_cdf(cal.scores);
      const double delta = svpl::coverage_factor(truth_cdf, perturbed_cdf, cal.q_hat);
      const bool fosd =
          svpl::check_fosd(random_cdf, noisy_cdf, svpl::merged_grid(random_cdf, noisy_cdf))
              .holds;
      double rbar = svpl::estimate_rbar(ds->data, folds.idx_cal, *labeler, score, alpha,
                                        j.value("rbar_reps", 50),
                                        svpl::Rng(split.seed, 7));

      svpl::csv::Writer dw(std::string(out_sets_csv) + ".diag.csv");
      dw.header({"alpha", "r", "q_hat", "delta_at_qhat", "fosd_holds", "rbar_estimate"});
      dw.row({svpl::csv::format_value(alpha), svpl::csv::format_value(r),
              svpl::csv::format_value(cal.q_hat), svpl::csv::format_value(delta),
              fosd ? "1" : "0", svpl::csv::format_value(rbar)});
      dw.close();

      meta["delta_at_qhat"] = delta;
      meta["fosd_holds"] = fosd;
      meta["rbar_estimate"] = rbar;
    }

    write_json_file(meta, std::string(out_sets_csv) + ".meta.json");
  });
}

svpl_status svpl_evaluate(const svpl_dataset* ds, const char* sets_csv,
                          const char* meta_json, const char* out_report_csv) {
  return guarded([&] {
    require_arg(ds != nullptr && sets_csv != nullptr && out_report_csv != nullptr,
                "svpl_evaluate: null argument");
    auto sets = svpl::csv::read_sets(sets_csv);
    svpl::require(static_cast<int>(sets.size()) == ds->data.rows(),
                  svpl::ErrorCode::LengthMismatch,
                  "svpl_evaluate: sets file row count differs from dataset");

    std::string method = "unknown";
    double alpha = std::nan("");
    double r = std::nan("");
    std::optional<double> delta;
    if (meta_json != nullptr && std::strlen(meta_json) > 0) {
      json m;
      std::ifstream in(meta_json, std::ios::binary);
      if (in) {
        try {
          in >> m;
        } catch (const std::exception& e) {
          svpl::raise(svpl::ErrorCode::Io,
                      std::string("svpl_evaluate: bad meta file: ") + e.what());
        }
      } else {
        m = parse_json(meta_json, "evaluate meta");
      }
      method = m.value("method", method);
      if (m.contains("alpha")) alpha = m["alpha"].get<double>();
      if (m.contains("r")) r = m["r"].get<double>();
      if (m.contains("delta_at_qhat")) delta = m["delta_at_qhat"].get<double>();
    }

    svpl::EvaluationReport report = svpl::evaluate_cell(sets, ds->data, delta);
    svpl::csv::Writer w(out_report_csv);
    w.header({"method", "alpha", "r", "coverage_hit", "coverage_prop", "cov_region_12",
              "cov_region_34", "mean_card", "empty_frac", "spv_uniform", "spv_lower",
              "delta_at_qhat"});
    w.row({method, svpl::csv::format_value(alpha), svpl::csv::format_value(r),
           svpl::csv::format_value(report.coverage_hit),
           svpl::csv::format_value(report.coverage_prop),
           svpl::csv::format_value(report.cov_region_12),
           svpl::csv::format_value(report.cov_region_34),
           svpl::csv::format_value(report.mean_cardinality),
           svpl::csv::format_value(report.empty_fraction),
           svpl::csv::format_value(report.spv_uniform),
           svpl::csv::format_value(report.spv_lower),
           report.delta_at_qhat ? svpl::csv::format_value(*report.delta_at_qhat)
                                : std::string()});
    w.close();
  });
}

svpl_status svpl_estimate_rbar(const svpl_dataset* ds, const char* options_json,
                               double* out_rbar) {
  return guarded([&] {
    require_arg(ds != nullptr && out_rbar != nullptr,
                "svpl_estimate_rbar: null argument");
    json j = parse_json(options_json, "estimate_rbar");
    check_keys(j, {"alpha", "reps", "labeler", "label_basis", "score_learner",
                   "score_basis", "knn_k", "knn_bootstrap", "fractions", "seed"},
               "estimate_rbar");
    const double alpha = j.value("alpha", 0.1);
    const int reps = j.value("reps", 200);
    SplitOptions split = split_options(j);

    svpl::Rng split_rng(split.seed, 3);
    svpl::FoldSplit folds = svpl::split_three_way(ds->data, split.frac_b,
                                                  split.frac_train, split.frac_cal,
                                                  split_rng);
    auto labeler = fit_labeler(ds->data, folds.idx_b, j);
    auto score_model = fit_score_model(ds->data, folds.idx_train, j, split.seed);
    svpl::ScoreFunction score = svpl::ScoreFunction::empirical(score_model);
    *out_rbar = svpl::estimate_rbar(ds->data, folds.idx_cal, *labeler, score, alpha,
                                    reps, svpl::Rng(split.seed, 7));
  });
}

svpl_status svpl_run_table1(const char* config_json, const char* out_csv) {
  return guarded([&] {
    require_arg(out_csv != nullptr, "svpl_run_table1: null output path");
    auto cfg = svpl::exp::ExperimentConfig::from_json_text(
        config_json ? config_json : "{}");
    svpl::exp::run_table1(cfg, out_csv);
  });
}

svpl_status svpl_run_sweep(const char* config_json, const char* out_csv) {
  return guarded([&] {
    require_arg(out_csv != nullptr, "svpl_run_sweep: null output path");
    auto cfg = svpl::exp::ExperimentConfig::from_json_text(
        config_json ? config_json : "{}");
    svpl::exp::run_sweep(cfg, out_csv);
  });
}

svpl_status svpl_run_tradeoff(const char* config_json, const char* out_csv) {
  return guarded([&] {
    require_arg(out_csv != nullptr, "svpl_run_tradeoff: null output path");
    auto cfg = svpl::exp::ExperimentConfig::from_json_text(
        config_json ? config_json : "{}");
    svpl::exp::run_tradeoff(cfg, out_csv);
  });
}

svpl_status svpl_run_rbar(const char* config_json, double* out_rbar) {
  return guarded([&] {
    require_arg(out_rbar != nullptr, "svpl_run_rbar: null output");
    auto cfg = svpl::exp::ExperimentConfig::from_json_text(
        config_json ? config_json : "{}");
    *out_rbar = svpl::exp::run_rbar(cfg);
  });
}

svpl_status svpl_render_plot(const char* options_json, const char* out_svg) {
  return guarded([&] {
    require_arg(out_svg != nullptr, "svpl_render_plot: null output path");
    json j = parse_json(options_json, "plot");
    check_keys(j, {"input", "kind", "x", "y", "value", "series", "filter", "title",
                   "width", "height"},
               "plot");
    svpl::require(j.contains("input"), svpl::ErrorCode::Config,
                  "plot: 'input' CSV path required");

    svpl::plot::PlotSpec spec;
    const std::string kind = j.value("kind", std::string("line"));
    if (kind == "line") {
      spec.kind = svpl::plot::PlotSpec::Kind::Line;
    } else if (kind == "heatmap") {
      spec.kind = svpl::plot::PlotSpec::Kind::Heatmap;
    } else {
      svpl::raise(svpl::ErrorCode::Config, "plot: unknown kind '" + kind + "'");
    }
    spec.x_column = j.value("x", std::string());
    spec.y_column = j.value("y", std::string());
    spec.value_column = j.value("value", std::string());
    if (j.contains("series")) spec.series_columns = j["series"].get<std::vector<std::string>>();
    if (j.contains("filter")) {
      for (const auto& item : j["filter"].items()) {
        spec.filters[item.key()] = item.value().is_string()
                                       ? item.value().get<std::string>()
                                       : item.value().dump();
      }
    }
    spec.title = j.value("title", std::string());
    spec.width = j.value("width", spec.width);
    spec.height = j.value("height", spec.height);

    svpl::csv::Table table = svpl::csv::read_table(j["input"].get<std::string>());
    svpl::plot::render_svg(table, spec, out_svg);
  });
}

}  // extern "C"
