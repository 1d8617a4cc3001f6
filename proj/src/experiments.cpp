#include "svpl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "svpl/csv.hpp"
#include "svpl/stats.hpp"

namespace svpl::exp {
namespace {

using nlohmann::json;

constexpr std::uint64_t kTrainData = 101;
constexpr std::uint64_t kTestData = 102;
constexpr std::uint64_t kSplit = 103;
constexpr std::uint64_t kKnnScore = 104;
constexpr std::uint64_t kKnnGlbBounds = 105;
constexpr std::uint64_t kKnnGlbMaxmin = 106;
constexpr std::uint64_t kOcpLabels = 107;
constexpr std::uint64_t kRandomDiag = 108;
constexpr std::uint64_t kRbar = 109;
constexpr std::uint64_t kConformalBase = 1000;  // + index into the r grid

Rng rep_rng(const ExperimentConfig& cfg, int n, int rep_index, std::uint64_t purpose) {
  return Rng(cfg.seed).stream(static_cast<std::uint64_t>(n))
      .stream(static_cast<std::uint64_t>(rep_index))
      .stream(purpose);
}

std::uint64_t derive_seed(const ExperimentConfig& cfg, int n, int rep_index,
                          std::uint64_t purpose) {
  Rng r = rep_rng(cfg, n, rep_index, purpose);
  return r.next_u64();
}

void parallel_for(int tasks, int threads, const std::function<void(int)>& body) {
  threads = std::clamp(threads, 1, std::max(1, tasks));
  if (threads == 1 || tasks <= 1) {
    for (int t = 0; t < tasks; ++t) body(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int t = next.fetch_add(1);
        if (t >= tasks) return;
        try {
          body(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

/// Runs `produce(rep)` for every replication, fanning a wave of `threads`
/// replications out at a time, and hands results to `consume` in replication
/// order as each wave completes. Completed work survives a later failure,
/// and output order is independent of the thread count.
template <typename Result>
void replication_waves(int reps, int threads,
                       const std::function<Result(int)>& produce,
                       const std::function<void(int, Result&)>& consume) {
  const int wave = std::max(1, threads);
  for (int start = 0; start < reps; start += wave) {
    const int count = std::min(wave, reps - start);
    std::vector<Result> buffer(static_cast<std::size_t>(count));
    parallel_for(count, threads, [&](int offset) {
      buffer[static_cast<std::size_t>(offset)] = produce(start + offset);
    });
    for (int offset = 0; offset < count; ++offset) {
      consume(start + offset, buffer[static_cast<std::size_t>(offset)]);
    }
  }
}

std::vector<double> default_grid(double step, double max_value) {
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    double v = i * step;
    if (v > max_value + 1e-12) break;
    grid.push_back(std::min(v, max_value));
  }
  return grid;
}

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& scope) {
  require(j.is_object(), ErrorCode::Config, "config: " + scope + " must be an object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      raise(ErrorCode::Config, "config: unknown key '" + item.key() + "' in " + scope);
    }
  }
}

void check_grid(const std::vector<double>& grid, const std::string& name) {
  require(!grid.empty(), ErrorCode::Config, "config: " + name + " is empty");
  for (double v : grid) {
    require(v >= 0.0 && v <= 1.0, ErrorCode::Config,
            "config: " + name + " entries must lie in [0, 1]");
  }
}

/// Precomputed per-row, per-arm bound ingredients so one fit serves every
/// alpha in a sweep. Gaussian entries keep (point, se); bootstrap entries
/// keep the sorted replicate predictions.
class CachedBounded final : public BoundedArmRegressor {
 public:
  struct Entry {
    double point = 0.0;
    double se = -1.0;                 // >= 0 selects the Gaussian path
    std::vector<double> replicates;   // sorted; bootstrap path
  };

  explicit CachedBounded(std::vector<Entry> entries) : entries_(std::move(entries)) {
    meta_.method = "cached";
  }

  double predict(const Eigen::RowVectorXd&, Arm a) const override {
    return entries_[static_cast<std::size_t>(a)].point;
  }

  double lower(const Eigen::RowVectorXd&, Arm a, double level) const override {
    const Entry& e = entries_[static_cast<std::size_t>(a)];
    if (e.se >= 0.0) {
      double z = bound_z(level);
      if (std::isinf(z)) return -z;
      return e.point - z * e.se;
    }
    double tail = (1.0 - level) / 2.0;
    return std::min(stats::sorted_quantile(e.replicates, tail), e.point);
  }

  double upper(const Eigen::RowVectorXd&, Arm a, double level) const override {
    const Entry& e = entries_[static_cast<std::size_t>(a)];
    if (e.se >= 0.0) {
      double z = bound_z(level);
      if (std::isinf(z)) return z;
      return e.point + z * e.se;
    }
    double tail = (1.0 - level) / 2.0;
    return std::max(stats::sorted_quantile(e.replicates, 1.0 - tail), e.point);
  }

  int num_arms() const override { return static_cast<int>(entries_.size()); }
  const RegressorMeta& meta() const override { return meta_; }

 private:
  std::vector<Entry> entries_;
  RegressorMeta meta_;
};

std::shared_ptr<const CachedBounded> cache_row(const BoundedArmRegressor& reg,
                                               const Eigen::RowVectorXd& x) {
  std::vector<CachedBounded::Entry> entries(static_cast<std::size_t>(reg.num_arms()));
  if (const auto* ols = dynamic_cast<const OlsArmRegressor*>(&reg)) {
    for (Arm a = 0; a < reg.num_arms(); ++a) {
      entries[static_cast<std::size_t>(a)].point = ols->predict(x, a);
      entries[static_cast<std::size_t>(a)].se = ols->standard_error(x, a);
    }
  } else if (const auto* knn = dynamic_cast<const KnnBootstrapRegressor*>(&reg)) {
    for (Arm a = 0; a < reg.num_arms(); ++a) {
      auto [point, preds] = knn->replicate_predictions(x, a);
      std::sort(preds.begin(), preds.end());
      entries[static_cast<std::size_t>(a)].point = point;
      entries[static_cast<std::size_t>(a)].replicates = std::move(preds);
    }
  } else {
    raise(ErrorCode::Internal, "cache_row: unsupported bounded regressor");
  }
  return std::make_shared<const CachedBounded>(std::move(entries));
}

struct GlbRowCaches {
  std::vector<std::shared_ptr<const CachedBounded>> bounds;
  std::vector<std::shared_ptr<const CachedBounded>> maxmin;  // empty when shared
};

GlbRowCaches build_glb_caches(const GlbPolicy& policy, const Dataset& test) {
  GlbRowCaches caches;
  caches.bounds.reserve(static_cast<std::size_t>(test.rows()));
  const bool split = policy.maxmin != nullptr;
  if (split) caches.maxmin.reserve(static_cast<std::size_t>(test.rows()));
  for (int i = 0; i < test.rows(); ++i) {
    caches.bounds.push_back(cache_row(*policy.bounds, test.x(i)));
    if (split) caches.maxmin.push_back(cache_row(*policy.maxmin, test.x(i)));
  }
  return caches;
}

std::vector<TreatmentSet> glb_sets_from_caches(const GlbRowCaches& caches,
                                               const Dataset& test, double alpha) {
  std::vector<TreatmentSet> sets;
  sets.reserve(caches.bounds.size());
  for (std::size_t i = 0; i < caches.bounds.size(); ++i) {
    GlbPolicy row_policy;
    row_policy.bounds = caches.bounds[i];
    if (!caches.maxmin.empty()) row_policy.maxmin = caches.maxmin[i];
    row_policy.alpha = alpha;
    sets.push_back(glb_set(test.x(static_cast<int>(i)), row_policy));
  }
  return sets;
}

std::vector<TreatmentSet> sets_from_scores(const Eigen::MatrixXd& test_scores,
                                           double q_hat) {
  const int K = static_cast<int>(test_scores.cols());
  std::vector<TreatmentSet> sets;
  sets.reserve(static_cast<std::size_t>(test_scores.rows()));
  for (Eigen::Index i = 0; i < test_scores.rows(); ++i) {
    std::vector<Arm> members;
    for (Arm a = 0; a < K; ++a) {
      if (test_scores(i, a) < q_hat) members.push_back(a);
    }
    sets.emplace_back(std::move(members), K);
  }
  return sets;
}

struct Aggregate {
  double mean = 0.0;
  double se = 0.0;
};

Aggregate aggregate(const std::vector<double>& values) {
  return {stats::mean(values), stats::standard_error(values)};
}

bool has_method(const ExperimentConfig& cfg, const std::string& name) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), name) != cfg.methods.end();
}

/// Everything a replication needs to answer any (method, alpha, r) cell.
struct RepEval {
  Replication rep;
  ScoreFunction score;
  Eigen::MatrixXd test_scores;           // test rows x arms
  Eigen::MatrixXd cal_scores;            // calibration rows x arms
  std::vector<Arm> noisy_labels;         // black-box labels on the cal fold
  std::vector<double> oracle_cal_scores; // scores at uniform-drawn optimal arms
  std::vector<double> noisy_cal_scores;  // scores at black-box labels (r = 0)
};

RepEval build_rep_eval(const ExperimentConfig& cfg, int n, int rep_index) {
  Replication rep = prepare_replication(cfg, n, rep_index);
  ScoreFunction score = ScoreFunction::empirical(rep.score_model);
  RepEval ev{std::move(rep), std::move(score), {}, {}, {}, {}, {}};

  const int K = ev.rep.train.num_arms();
  ev.test_scores.resize(ev.rep.test.rows(), K);
  for (int i = 0; i < ev.rep.test.rows(); ++i) {
    ev.test_scores.row(i) = ev.score.all_arms(ev.rep.test.x(i)).transpose();
  }

  const auto& cal = ev.rep.folds.idx_cal;
  ev.cal_scores.resize(static_cast<Eigen::Index>(cal.size()), K);
  ev.noisy_labels.resize(cal.size());
  ev.noisy_cal_scores.resize(cal.size());
  for (std::size_t j = 0; j < cal.size(); ++j) {
    const Eigen::RowVectorXd x = ev.rep.train.x(cal[j]);
    ev.cal_scores.row(static_cast<Eigen::Index>(j)) = ev.score.all_arms(x).transpose();
    ev.noisy_labels[j] = ev.rep.labeler->assign(x);
    ev.noisy_cal_scores[j] = ev.cal_scores(static_cast<Eigen::Index>(j), ev.noisy_labels[j]);
  }

  Rng ocp_rng = rep_rng(cfg, n, rep_index, kOcpLabels);
  const OracleTruth& oracle = ev.rep.train.oracle();
  ev.oracle_cal_scores.resize(cal.size());
  for (std::size_t j = 0; j < cal.size(); ++j) {
    const TreatmentSet& opt = oracle.optimal_sets[static_cast<std::size_t>(cal[j])];
    Arm a = opt.arms()[static_cast<std::size_t>(ocp_rng.next_int(opt.size()))];
    ev.oracle_cal_scores[j] = ev.cal_scores(static_cast<Eigen::Index>(j), a);
  }
  return ev;
}

CellResult make_cell(const std::string& method, double alpha, double r, double q_hat,
                     const std::vector<TreatmentSet>& sets, const Dataset& test,
                     std::optional<double> delta = std::nullopt,
                     std::optional<bool> fosd = std::nullopt) {
  CellResult cell;
  cell.method = method;
  cell.alpha = alpha;
  cell.r = r;
  cell.q_hat = q_hat;
  cell.report = evaluate_cell(sets, test, delta);
  cell.fosd_holds = fosd;
  return cell;
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? csv::format_value(*v) : std::string();
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  alpha_grid = default_grid(0.05, 1.0);
  r_grid = default_grid(0.1, 1.0);
  for (int i = 1; i <= 10; ++i) tradeoff_alpha_grid.push_back(i * 0.05);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    raise(ErrorCode::Config, std::string("config: invalid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  check_keys(j, {"seed", "threads", "reps", "test_n", "n_list", "alpha_grid", "r_grid",
                 "methods", "fractions", "dgp", "learners", "table1", "tradeoff", "rbar"},
             "top level");

  try {
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("reps")) cfg.reps = j["reps"].get<int>();
    if (j.contains("test_n")) cfg.test_n = j["test_n"].get<int>();
    if (j.contains("n_list")) cfg.n_list = j["n_list"].get<std::vector<int>>();
    if (j.contains("alpha_grid")) cfg.alpha_grid = j["alpha_grid"].get<std::vector<double>>();
    if (j.contains("r_grid")) cfg.r_grid = j["r_grid"].get<std::vector<double>>();
    if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("fractions")) {
      auto f = j["fractions"].get<std::vector<double>>();
      require(f.size() == 3, ErrorCode::Config, "config: fractions needs three entries");
      cfg.frac_b = f[0];
      cfg.frac_train = f[1];
      cfg.frac_cal = f[2];
    }
    if (j.contains("dgp")) {
      const auto& d = j["dgp"];
      check_keys(d, {"d", "arms", "noise_sd", "secondary_outcome", "tie_tol"}, "dgp");
      if (d.contains("d")) cfg.dgp_d = d["d"].get<int>();
      if (d.contains("arms")) cfg.dgp_arms = d["arms"].get<int>();
      if (d.contains("noise_sd")) cfg.noise_sd = d["noise_sd"].get<double>();
      if (d.contains("secondary_outcome"))
        cfg.secondary_outcome = d["secondary_outcome"].get<bool>();
      if (d.contains("tie_tol")) cfg.tie_tol = d["tie_tol"].get<double>();
    }
    if (j.contains("learners")) {
      const auto& l = j["learners"];
      check_keys(l, {"labeler", "label_basis", "score_learner", "score_basis",
                     "glb_learner", "glb_basis", "knn_k", "glb_knn_k", "knn_bootstrap",
                     "glb_split_maxmin"},
                 "learners");
      auto& opt = cfg.learners;
      if (l.contains("labeler")) opt.labeler = l["labeler"].get<std::string>();
      if (l.contains("label_basis")) opt.label_basis = l["label_basis"].get<std::string>();
      if (l.contains("score_learner"))
        opt.score_learner = l["score_learner"].get<std::string>();
      if (l.contains("score_basis")) opt.score_basis = l["score_basis"].get<std::string>();
      if (l.contains("glb_learner")) opt.glb_learner = l["glb_learner"].get<std::string>();
      if (l.contains("glb_basis")) opt.glb_basis = l["glb_basis"].get<std::string>();
      if (l.contains("knn_k")) opt.knn_k = l["knn_k"].get<int>();
      if (l.contains("glb_knn_k")) opt.glb_knn_k = l["glb_knn_k"].get<int>();
      if (l.contains("knn_bootstrap")) opt.knn_bootstrap = l["knn_bootstrap"].get<int>();
      if (l.contains("glb_split_maxmin"))
        opt.glb_split_maxmin = l["glb_split_maxmin"].get<bool>();
    }
    if (j.contains("table1")) {
      const auto& t = j["table1"];
      check_keys(t, {"alpha", "n", "r_values"}, "table1");
      if (t.contains("alpha")) cfg.table1_alpha = t["alpha"].get<double>();
      if (t.contains("n")) cfg.table1_n = t["n"].get<int>();
      if (t.contains("r_values")) cfg.table1_r = t["r_values"].get<std::vector<double>>();
    }
    if (j.contains("tradeoff")) {
      const auto& t = j["tradeoff"];
      check_keys(t, {"alpha_grid", "r"}, "tradeoff");
      if (t.contains("alpha_grid"))
        cfg.tradeoff_alpha_grid = t["alpha_grid"].get<std::vector<double>>();
      if (t.contains("r")) cfg.tradeoff_r = t["r"].get<double>();
    }
    if (j.contains("rbar")) {
      const auto& t = j["rbar"];
      check_keys(t, {"reps", "alpha"}, "rbar");
      if (t.contains("reps")) cfg.rbar_reps = t["reps"].get<int>();
      if (t.contains("alpha")) cfg.rbar_alpha = t["alpha"].get<double>();
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorCode::Config, std::string("config: bad value: ") + e.what());
  }

  require(cfg.reps >= 1, ErrorCode::Config, "config: reps must be at least 1");
  require(cfg.threads >= 1, ErrorCode::Config, "config: threads must be at least 1");
  require(cfg.test_n >= 1, ErrorCode::Config, "config: test_n must be positive");
  check_grid(cfg.alpha_grid, "alpha_grid");
  check_grid(cfg.r_grid, "r_grid");
  check_grid(cfg.table1_r, "table1.r_values");
  check_grid(cfg.tradeoff_alpha_grid, "tradeoff.alpha_grid");
  require(!cfg.methods.empty(), ErrorCode::Config, "config: methods list is empty");
  for (const auto& m : cfg.methods) {
    require(m == "ocp" || m == "conformal" || m == "glb", ErrorCode::Config,
            "config: unknown method '" + m + "'");
  }
  for (int n : cfg.n_list) {
    require(n >= 30, ErrorCode::Config, "config: n_list entries must be at least 30");
  }
  return cfg;
}

Replication prepare_replication(const ExperimentConfig& cfg, int n, int rep_index) {
  dgp::SyntheticConfig data_cfg;
  data_cfg.n = n;
  data_cfg.d = cfg.dgp_d;
  data_cfg.num_arms = cfg.dgp_arms;
  data_cfg.noise_sd = cfg.noise_sd;
  data_cfg.secondary_outcome = cfg.secondary_outcome;
  data_cfg.tie_tol = cfg.tie_tol;

  data_cfg.seed = derive_seed(cfg, n, rep_index, kTrainData);
  Dataset train = dgp::generate(data_cfg);

  dgp::SyntheticConfig test_cfg = data_cfg;
  test_cfg.n = cfg.test_n;
  test_cfg.seed = derive_seed(cfg, n, rep_index, kTestData);
  Dataset test = dgp::generate(test_cfg);

  Rng split_rng = rep_rng(cfg, n, rep_index, kSplit);
  FoldSplit folds = split_three_way(train, cfg.frac_b, cfg.frac_train, cfg.frac_cal,
                                    split_rng);

  const bool iw = cfg.learners.labeler == "qlearn-iw";
  require(cfg.learners.labeler == "qlearn" || iw, ErrorCode::Config,
          "config: unknown labeler '" + cfg.learners.labeler + "'");
  std::shared_ptr<const LabelGenerator> labeler = QLearningLabelGenerator::fit(
      train, folds.idx_b, BasisSpec::from_name(cfg.learners.label_basis), iw);

  std::shared_ptr<const ArmRegressor> score_model;
  if (cfg.learners.score_learner == "ols") {
    score_model = OlsArmRegressor::fit(train, folds.idx_train,
                                       BasisSpec::from_name(cfg.learners.score_basis));
  } else if (cfg.learners.score_learner == "knn") {
    score_model = KnnBootstrapRegressor::fit(train, folds.idx_train, cfg.learners.knn_k,
                                             cfg.learners.knn_bootstrap,
                                             rep_rng(cfg, n, rep_index, kKnnScore));
  } else {
    raise(ErrorCode::Config,
          "config: unknown score learner '" + cfg.learners.score_learner + "'");
  }

  return Replication{n, rep_index, std::move(train), std::move(test), std::move(folds),
                     std::move(labeler), std::move(score_model)};
}

ScoreFunction empirical_score(const Replication& rep) {
  return ScoreFunction::empirical(rep.score_model);
}

GlbPolicy fit_glb(const ExperimentConfig& cfg, const Replication& rep, double alpha) {
  GlbPolicy policy;
  policy.alpha = alpha;
  const BasisSpec basis = BasisSpec::from_name(cfg.learners.glb_basis);
  const std::string& kind = cfg.learners.glb_learner;
  require(kind == "ols" || kind == "knn", ErrorCode::Config,
          "config: unknown glb learner '" + kind + "'");

  auto fit_on = [&](const std::vector<int>& fold, std::uint64_t purpose)
      -> std::shared_ptr<const BoundedArmRegressor> {
    if (kind == "ols") return OlsArmRegressor::fit(rep.train, fold, basis);
    return KnnBootstrapRegressor::fit(rep.train, fold, cfg.learners.glb_knn_k,
                                      cfg.learners.knn_bootstrap,
                                      rep_rng(cfg, rep.n, rep.rep_index, purpose));
  };

  policy.bounds = fit_on(rep.folds.idx_train, kKnnGlbBounds);
  if (cfg.learners.glb_split_maxmin) policy.maxmin = fit_on(rep.folds.idx_b, kKnnGlbMaxmin);
  return policy;
}

std::vector<CellResult> table1_cells(const ExperimentConfig& cfg, int rep_index) {
  const int n = cfg.table1_n;
  const double alpha = cfg.table1_alpha;
  RepEval ev = build_rep_eval(cfg, n, rep_index);
  std::vector<CellResult> cells;

  if (has_method(cfg, "ocp")) {
    double q = conformal_quantile(ev.oracle_cal_scores, alpha);
    cells.push_back(make_cell("ocp", alpha, 0.0, q,
                              sets_from_scores(ev.test_scores, q), ev.rep.test));
  }
  if (has_method(cfg, "conformal")) {
    ScoreCdf truth_cdf(ev.oracle_cal_scores);
    for (std::size_t ri = 0; ri < cfg.table1_r.size(); ++ri) {
      const double r = cfg.table1_r[ri];
      Rng inject_rng = rep_rng(cfg, n, rep_index, kConformalBase + ri);
      std::vector<Arm> labels =
          inject_randomness(ev.noisy_labels, r, ev.rep.train.num_arms(), inject_rng);
      std::vector<double> scores(labels.size());
      for (std::size_t j = 0; j < labels.size(); ++j) {
        scores[j] = ev.cal_scores(static_cast<Eigen::Index>(j), labels[j]);
      }
      double q = conformal_quantile(scores, alpha);
      double delta = coverage_factor(truth_cdf, ScoreCdf(scores), q);
      cells.push_back(make_cell("conformal", alpha, r, q,
                                sets_from_scores(ev.test_scores, q), ev.rep.test, delta));
    }
  }
  if (has_method(cfg, "glb")) {
    GlbPolicy policy = fit_glb(cfg, ev.rep, alpha);
    GlbRowCaches caches = build_glb_caches(policy, ev.rep.test);
    cells.push_back(make_cell("glb", alpha, 0.0,
                              std::numeric_limits<double>::quiet_NaN(),
                              glb_sets_from_caches(caches, ev.rep.test, alpha),
                              ev.rep.test));
  }
  return cells;
}

void run_table1(const ExperimentConfig& cfg, const std::string& out_csv) {
  // Per-replication cells go to a sidecar as each wave of workers finishes,
  // so a failed run keeps the completed replications; the aggregate grid is
  // written at the end.
  csv::Writer rep_writer(out_csv + ".reps.csv");
  rep_writer.header({"method", "alpha", "r", "n", "rep", "q_hat", "coverage_hit",
                     "coverage_prop", "cov_region_12", "cov_region_34", "mean_card",
                     "empty_frac", "spv_uniform", "spv_lower", "delta_at_qhat"});

  std::vector<std::vector<CellResult>> per_rep(static_cast<std::size_t>(cfg.reps));
  replication_waves<std::vector<CellResult>>(
      cfg.reps, cfg.threads, [&](int rep) { return table1_cells(cfg, rep); },
      [&](int rep, std::vector<CellResult>& cells) {
        for (const CellResult& cell : cells) {
          rep_writer.row({cell.method, csv::format_value(cell.alpha),
                          csv::format_value(cell.r), std::to_string(cfg.table1_n),
                          std::to_string(rep),
                          std::isnan(cell.q_hat) ? std::string()
                                                 : csv::format_value(cell.q_hat),
                          csv::format_value(cell.report.coverage_hit),
                          csv::format_value(cell.report.coverage_prop),
                          csv::format_value(cell.report.cov_region_12),
                          csv::format_value(cell.report.cov_region_34),
                          csv::format_value(cell.report.mean_cardinality),
                          csv::format_value(cell.report.empty_fraction),
                          csv::format_value(cell.report.spv_uniform),
                          csv::format_value(cell.report.spv_lower),
                          opt_cell(cell.report.delta_at_qhat)});
        }
        rep_writer.flush();
        per_rep[static_cast<std::size_t>(rep)] = std::move(cells);
      });
  rep_writer.close();

  // Aggregate by cell position; every rep emits the same cell sequence.
  require(!per_rep.empty() && !per_rep.front().empty(), ErrorCode::Config,
          "run_table1: no methods selected");
  const std::size_t n_cells = per_rep.front().size();

  csv::Writer w(out_csv);
  w.header({"method", "alpha", "r", "n", "reps",
            "coverage_hit_mean", "coverage_hit_se",
            "coverage_prop_mean", "coverage_prop_se",
            "cov_region_12_mean", "cov_region_12_se",
            "cov_region_34_mean", "cov_region_34_se",
            "mean_card_mean", "mean_card_se",
            "empty_frac_mean", "empty_frac_se",
            "spv_uniform_mean", "spv_uniform_se",
            "spv_lower_mean", "spv_lower_se"});

  for (std::size_t c = 0; c < n_cells; ++c) {
    std::vector<double> hit, prop, c12, c34, card, empty, spv_u, spv_l;
    for (const auto& rep_cells : per_rep) {
      const EvaluationReport& rp = rep_cells[c].report;
      hit.push_back(rp.coverage_hit);
      prop.push_back(rp.coverage_prop);
      c12.push_back(rp.cov_region_12);
      c34.push_back(rp.cov_region_34);
      card.push_back(rp.mean_cardinality);
      empty.push_back(rp.empty_fraction);
      spv_u.push_back(rp.spv_uniform);
      spv_l.push_back(rp.spv_lower);
    }
    const CellResult& head = per_rep.front()[c];
    auto m = [&](const std::vector<double>& v) { return aggregate(v); };
    Aggregate ahit = m(hit), aprop = m(prop), a12 = m(c12), a34 = m(c34), acard = m(card),
              aempty = m(empty), aspvu = m(spv_u), aspvl = m(spv_l);
    w.row({head.method, csv::format_value(head.alpha), csv::format_value(head.r),
           std::to_string(cfg.table1_n), std::to_string(cfg.reps),
           csv::format_value(ahit.mean), csv::format_value(ahit.se),
           csv::format_value(aprop.mean), csv::format_value(aprop.se),
           csv::format_value(a12.mean), csv::format_value(a12.se),
           csv::format_value(a34.mean), csv::format_value(a34.se),
           csv::format_value(acard.mean), csv::format_value(acard.se),
           csv::format_value(aempty.mean), csv::format_value(aempty.se),
           csv::format_value(aspvu.mean), csv::format_value(aspvu.se),
           csv::format_value(aspvl.mean), csv::format_value(aspvl.se)});
  }
  w.close();
}

namespace {

struct SweepRow {
  std::string method;
  int n = 0;
  double alpha = 0.0;
  double r = 0.0;
  int rep = 0;
  std::optional<double> q_hat;
  EvaluationReport report;
  std::optional<bool> fosd;
};

std::vector<SweepRow> sweep_replication(const ExperimentConfig& cfg, int n, int rep_index) {
  RepEval ev = build_rep_eval(cfg, n, rep_index);
  std::vector<SweepRow> rows;
  const int K = ev.rep.train.num_arms();

  auto push = [&](const std::string& method, double alpha, double r,
                  std::optional<double> q, const std::vector<TreatmentSet>& sets,
                  std::optional<double> delta, std::optional<bool> fosd) {
    SweepRow row;
    row.method = method;
    row.n = n;
    row.alpha = alpha;
    row.r = r;
    row.rep = rep_index;
    row.q_hat = q;
    row.report = evaluate_cell(sets, ev.rep.test, delta);
    row.fosd = fosd;
    rows.push_back(std::move(row));
  };

  if (has_method(cfg, "ocp")) {
    std::vector<double> sorted = ev.oracle_cal_scores;
    std::sort(sorted.begin(), sorted.end());
    for (double alpha : cfg.alpha_grid) {
      double q = conformal_quantile_sorted(sorted, alpha);
      push("ocp", alpha, 0.0, q, sets_from_scores(ev.test_scores, q), std::nullopt,
           std::nullopt);
    }
  }

  if (has_method(cfg, "conformal")) {
    ScoreCdf truth_cdf(ev.oracle_cal_scores);

    // Assumption-3 diagnostic: random-label scores vs unperturbed noisy scores.
    Rng diag_rng = rep_rng(cfg, n, rep_index, kRandomDiag);
    std::vector<double> random_scores(ev.noisy_labels.size());
    for (std::size_t j = 0; j < random_scores.size(); ++j) {
      random_scores[j] = ev.cal_scores(static_cast<Eigen::Index>(j), diag_rng.next_int(K));
    }
    ScoreCdf random_cdf(random_scores);
    ScoreCdf noisy_cdf(ev.noisy_cal_scores);
    bool fosd = check_fosd(random_cdf, noisy_cdf, merged_grid(random_cdf, noisy_cdf)).holds;

    for (std::size_t ri = 0; ri < cfg.r_grid.size(); ++ri) {
      const double r = cfg.r_grid[ri];
      Rng inject_rng = rep_rng(cfg, n, rep_index, kConformalBase + ri);
      std::vector<Arm> labels = inject_randomness(ev.noisy_labels, r, K, inject_rng);
      std::vector<double> scores(labels.size());
      for (std::size_t j = 0; j < labels.size(); ++j) {
        scores[j] = ev.cal_scores(static_cast<Eigen::Index>(j), labels[j]);
      }
      ScoreCdf perturbed_cdf(scores);
      std::vector<double> sorted = scores;
      std::sort(sorted.begin(), sorted.end());
      for (double alpha : cfg.alpha_grid) {
        double q = conformal_quantile_sorted(sorted, alpha);
        double delta = coverage_factor(truth_cdf, perturbed_cdf, q);
        push("conformal", alpha, r, q, sets_from_scores(ev.test_scores, q), delta, fosd);
      }
    }
  }

  if (has_method(cfg, "glb")) {
    GlbPolicy policy = fit_glb(cfg, ev.rep, cfg.alpha_grid.front());
    GlbRowCaches caches = build_glb_caches(policy, ev.rep.test);
    for (double alpha : cfg.alpha_grid) {
      push("glb", alpha, 0.0, std::nullopt,
           glb_sets_from_caches(caches, ev.rep.test, alpha), std::nullopt, std::nullopt);
    }
  }
  return rows;
}

}  // namespace

void run_sweep(const ExperimentConfig& cfg, const std::string& out_csv) {
  csv::Writer w(out_csv);
  w.header({"method", "n", "alpha", "r", "rep", "q_hat", "coverage_hit", "coverage_prop",
            "cov_region_12", "cov_region_34", "mean_card", "empty_frac", "spv_uniform",
            "spv_lower", "delta_at_qhat", "fosd_holds"});

  for (int n : cfg.n_list) {
    replication_waves<std::vector<SweepRow>>(
        cfg.reps, cfg.threads, [&](int rep) { return sweep_replication(cfg, n, rep); },
        [&](int, std::vector<SweepRow>& rep_rows) {
          for (const SweepRow& row : rep_rows) {
            w.row({row.method, std::to_string(row.n), csv::format_value(row.alpha),
                   csv::format_value(row.r), std::to_string(row.rep),
                   opt_cell(row.q_hat),
                   csv::format_value(row.report.coverage_hit),
                   csv::format_value(row.report.coverage_prop),
                   csv::format_value(row.report.cov_region_12),
                   csv::format_value(row.report.cov_region_34),
                   csv::format_value(row.report.mean_cardinality),
                   csv::format_value(row.report.empty_fraction),
                   csv::format_value(row.report.spv_uniform),
                   csv::format_value(row.report.spv_lower),
                   opt_cell(row.report.delta_at_qhat),
                   row.fosd ? (*row.fosd ? "1" : "0") : ""});
          }
          w.flush();
        });
  }
  w.close();
}

void run_tradeoff(const ExperimentConfig& cfg, const std::string& out_csv) {
  require(cfg.secondary_outcome, ErrorCode::Config,
          "run_tradeoff: dgp.secondary_outcome must be enabled");

  struct TradeoffCell {
    double spv_y_unif, spv_y_lower, spv_xi_unif, spv_xi_lower;
  };
  // [rep][method-major row: method x alpha]
  std::vector<std::vector<TradeoffCell>> per_rep(static_cast<std::size_t>(cfg.reps));
  std::vector<std::pair<std::string, double>> layout;  // (method, alpha)
  const bool with_conformal = has_method(cfg, "conformal");
  const bool with_glb = has_method(cfg, "glb");
  require(with_conformal || with_glb, ErrorCode::Config,
          "run_tradeoff: needs conformal or glb in methods");
  if (with_conformal) {
    for (double a : cfg.tradeoff_alpha_grid) layout.emplace_back("conformal", a);
  }
  if (with_glb) {
    for (double a : cfg.tradeoff_alpha_grid) layout.emplace_back("glb", a);
  }

  const int n = cfg.table1_n;
  parallel_for(cfg.reps, cfg.threads, [&](int rep_index) {
    RepEval ev = build_rep_eval(cfg, n, rep_index);
    const OracleTruth& oracle = ev.rep.test.oracle();
    require(oracle.secondary_mu.has_value(), ErrorCode::OracleRequired,
            "run_tradeoff: secondary outcome surface missing");
    const Eigen::MatrixXd& mu_y = oracle.mu;
    const Eigen::MatrixXd& mu_xi = *oracle.secondary_mu;

    auto eval_sets = [&](const std::vector<TreatmentSet>& sets) {
      return TradeoffCell{spv_uniform(sets, mu_y), spv_lower(sets, mu_y),
                          spv_uniform(sets, mu_xi), spv_lower(sets, mu_xi)};
    };

    std::vector<TradeoffCell>& out = per_rep[static_cast<std::size_t>(rep_index)];
    if (with_conformal) {
      Rng inject_rng = rep_rng(cfg, n, rep_index, kConformalBase);
      std::vector<Arm> labels = inject_randomness(ev.noisy_labels, cfg.tradeoff_r,
                                                  ev.rep.train.num_arms(), inject_rng);
      std::vector<double> scores(labels.size());
      for (std::size_t j = 0; j < labels.size(); ++j) {
        scores[j] = ev.cal_scores(static_cast<Eigen::Index>(j), labels[j]);
      }
      std::sort(scores.begin(), scores.end());
      for (double alpha : cfg.tradeoff_alpha_grid) {
        double q = conformal_quantile_sorted(scores, alpha);
        out.push_back(eval_sets(sets_from_scores(ev.test_scores, q)));
      }
    }
    if (with_glb) {
      GlbPolicy policy = fit_glb(cfg, ev.rep, cfg.tradeoff_alpha_grid.front());
      GlbRowCaches caches = build_glb_caches(policy, ev.rep.test);
      for (double alpha : cfg.tradeoff_alpha_grid) {
        out.push_back(eval_sets(glb_sets_from_caches(caches, ev.rep.test, alpha)));
      }
    }
  });

  csv::Writer w(out_csv);
  w.header({"method", "alpha", "r", "delta", "spv_y_mean", "spv_y_se", "spv_xi_mean",
            "spv_xi_se"});
  for (std::size_t c = 0; c < layout.size(); ++c) {
    std::vector<double> yu, yl, xu, xl;
    for (const auto& rep_cells : per_rep) {
      yu.push_back(rep_cells[c].spv_y_unif);
      yl.push_back(rep_cells[c].spv_y_lower);
      xu.push_back(rep_cells[c].spv_xi_unif);
      xl.push_back(rep_cells[c].spv_xi_lower);
    }
    const auto& [method, alpha] = layout[c];
    const double r = method == "conformal" ? cfg.tradeoff_r : 0.0;
    Aggregate ayu = aggregate(yu), ayl = aggregate(yl), axu = aggregate(xu),
              axl = aggregate(xl);
    w.row({method, csv::format_value(alpha), csv::format_value(r), "uniform",
           csv::format_value(ayu.mean), csv::format_value(ayu.se),
           csv::format_value(axu.mean), csv::format_value(axu.se)});
    w.row({method, csv::format_value(alpha), csv::format_value(r), "lower",
           csv::format_value(ayl.mean), csv::format_value(ayl.se),
           csv::format_value(axl.mean), csv::format_value(axl.se)});
  }
  w.close();
}

double run_rbar(const ExperimentConfig& cfg) {
  Replication rep = prepare_replication(cfg, cfg.table1_n, 0);
  ScoreFunction score = empirical_score(rep);
  return estimate_rbar(rep.train, rep.folds.idx_cal, *rep.labeler, score, cfg.rbar_alpha,
                       cfg.rbar_reps, rep_rng(cfg, cfg.table1_n, 0, kRbar));
}

}  // namespace svpl::exp
