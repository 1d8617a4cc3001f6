// svpl command-line tool. Thin shell over the shared-library C API: flags are
// folded into JSON option strings, exit codes are 0 (success), 2 (config or
// input error), 3 (numerical failure).
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "svpl.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int exit_code(svpl_status status) {
  switch (status) {
    case SVPL_OK:
      return kExitOk;
    case SVPL_ERR_INVALID_ARGUMENT:
    case SVPL_ERR_CONFIG:
    case SVPL_ERR_IO:
    case SVPL_ERR_ORACLE_REQUIRED:
    case SVPL_ERR_EMPTY_FOLD:
      return kExitConfig;
    default:
      return kExitNumerical;
  }
}

int finish(svpl_status status, const std::string& action) {
  if (status == SVPL_OK) return kExitOk;
  std::fprintf(stderr, "svpl: %s failed: %s\n", action.c_str(), svpl_last_error());
  return exit_code(status);
}

std::string oracle_sibling(const std::string& data_path) {
  auto pos = data_path.rfind(".csv");
  if (pos != std::string::npos && pos == data_path.size() - 4) {
    return data_path.substr(0, pos) + ".oracle.csv";
  }
  return data_path + ".oracle.csv";
}

json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
  }
  return j;
}

struct DatasetHandle {
  svpl_dataset* ptr = nullptr;
  ~DatasetHandle() { svpl_dataset_free(ptr); }
};

/// Global experiment settings shared by the sweep-style subcommands.
struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir;
};

std::string out_path(const GlobalOpts& g, const std::string& name) {
  if (g.out_dir.empty()) return name;
  std::filesystem::create_directories(g.out_dir);
  return g.out_dir + "/" + name;
}

json experiment_config(const GlobalOpts& g) {
  json cfg = g.config_path.empty() ? json::object() : load_config_file(g.config_path);
  if (g.seed) cfg["seed"] = *g.seed;      // flags win over the config file
  if (g.threads) cfg["threads"] = *g.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"set-valued treatment-policy learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", svpl_version());
  // global flags (--seed, --threads, ...) may appear after the subcommand
  app.fallthrough();

  GlobalOpts global;
  app.add_option("--config", global.config_path, "JSON config file");
  std::uint64_t seed_flag = 0;
  auto* seed_opt = app.add_option("--seed", seed_flag, "base RNG seed");
  int threads_flag = 1;
  auto* threads_opt = app.add_option("--threads", threads_flag, "worker threads");
  app.add_option("--out-dir", global.out_dir, "directory for output files");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "draw the synthetic benchmark");
  int sim_n = 6000;
  int sim_d = 4;
  double sim_noise = 0.5;
  bool sim_secondary = false;
  std::string sim_out = "data.csv";
  simulate->add_option("--n", sim_n, "sample size");
  simulate->add_option("--d", sim_d, "covariate dimension");
  simulate->add_option("--noise-sd", sim_noise, "outcome noise sd");
  simulate->add_flag("--secondary", sim_secondary, "attach the secondary outcome");
  simulate->add_option("--out", sim_out, "output CSV path");

  // run-glb
  auto* run_glb = app.add_subcommand("run-glb", "greatest-lower-bound set policy");
  double glb_alpha = 0.1;
  std::string glb_learner = "ols";
  std::string glb_basis = "dgp-aware";
  std::string glb_data, glb_oracle, glb_out = "sets.csv";
  bool glb_no_split = false;
  int glb_k = 50, glb_b = 200;
  run_glb->add_option("--alpha", glb_alpha, "confidence level");
  run_glb->add_option("--learner", glb_learner, "ols|knn")
      ->check(CLI::IsMember({"ols", "knn"}));
  run_glb->add_option("--basis", glb_basis, "linear|dgp-aware");
  run_glb->add_option("--data", glb_data, "input dataset CSV")->required();
  run_glb->add_option("--oracle", glb_oracle, "oracle sibling CSV");
  run_glb->add_option("--out", glb_out, "output sets CSV");
  run_glb->add_flag("--no-split-maxmin", glb_no_split,
                    "fit benchmark arm on the bounds fold");
  run_glb->add_option("--knn-k", glb_k, "k for the knn learner");
  run_glb->add_option("--knn-bootstrap", glb_b, "bootstrap replicates");

  // run-conformal
  auto* run_conf = app.add_subcommand("run-conformal", "conformal set policy");
  double conf_alpha = 0.1, conf_r = 0.2;
  std::string conf_labeler = "qlearn", conf_label_basis = "linear";
  std::string conf_score = "ols", conf_score_basis = "linear";
  std::string conf_data, conf_oracle, conf_out = "sets.csv";
  bool conf_diag = false;
  run_conf->add_option("--alpha", conf_alpha, "confidence level");
  run_conf->add_option("--r", conf_r, "randomness injection level");
  run_conf->add_option("--labeler", conf_labeler, "qlearn|qlearn-iw")
      ->check(CLI::IsMember({"qlearn", "qlearn-iw"}));
  run_conf->add_option("--label-basis", conf_label_basis, "labeler basis preset");
  run_conf->add_option("--score-learner", conf_score, "ols|knn")
      ->check(CLI::IsMember({"ols", "knn"}));
  run_conf->add_option("--score-basis", conf_score_basis, "score basis preset");
  run_conf->add_option("--data", conf_data, "input dataset CSV")->required();
  run_conf->add_option("--oracle", conf_oracle, "oracle sibling CSV");
  run_conf->add_option("--out", conf_out, "output sets CSV");
  run_conf->add_flag("--diagnostics", conf_diag,
                     "write coverage-factor diagnostics (needs oracle)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score sets against oracle truth");
  std::string eval_sets, eval_data, eval_oracle, eval_meta, eval_report = "report.csv";
  evaluate->add_option("--sets", eval_sets, "sets CSV")->required();
  evaluate->add_option("--data", eval_data, "dataset CSV")->required();
  evaluate->add_option("--oracle", eval_oracle, "oracle sibling CSV");
  evaluate->add_option("--meta", eval_meta, "meta JSON from the run step");
  evaluate->add_option("--report", eval_report, "output report CSV");

  // experiment drivers
  auto* table1 = app.add_subcommand("table1", "replicated benchmark cell grid");
  std::string table1_out = "table1.csv";
  table1->add_option("--out", table1_out, "output CSV");

  auto* sweep = app.add_subcommand("sweep", "full alpha x r x n grid, long format");
  std::string sweep_out = "sweep.csv";
  sweep->add_option("--out", sweep_out, "output CSV");

  auto* tradeoff = app.add_subcommand("tradeoff", "secondary-outcome tradeoff demo");
  std::string tradeoff_out = "tradeoff.csv";
  tradeoff->add_option("--out", tradeoff_out, "output CSV");

  auto* rbar = app.add_subcommand("rbar", "estimate the required randomness level");
  std::string rbar_out;
  rbar->add_option("--out", rbar_out, "optional CSV for the estimate");

  // plot
  auto* plot = app.add_subcommand("plot", "render an emitted CSV as an SVG chart");
  std::string plot_input, plot_kind = "line", plot_x, plot_y, plot_value, plot_title;
  std::vector<std::string> plot_series, plot_filters;
  std::string plot_out = "plot.svg";
  plot->add_option("--input", plot_input, "CSV to plot")->required();
  plot->add_option("--kind", plot_kind, "line|heatmap")
      ->check(CLI::IsMember({"line", "heatmap"}));
  plot->add_option("--x", plot_x, "x-axis column")->required();
  plot->add_option("--y", plot_y, "y-axis column")->required();
  plot->add_option("--value", plot_value, "heatmap cell metric column");
  plot->add_option("--series", plot_series, "grouping column (repeatable)");
  plot->add_option("--where", plot_filters, "row filter column=value (repeatable)");
  plot->add_option("--title", plot_title, "chart title");
  plot->add_option("--out", plot_out, "output SVG path");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) global.seed = seed_flag;
  if (*threads_opt) global.threads = threads_flag;

  try {
    if (*simulate) {
      json cfg{{"n", sim_n}, {"d", sim_d}, {"noise_sd", sim_noise},
               {"secondary_outcome", sim_secondary}};
      cfg["seed"] = global.seed.value_or(0);
      DatasetHandle ds;
      svpl_status st = svpl_simulate(cfg.dump().c_str(), &ds.ptr);
      if (st != SVPL_OK) return finish(st, "simulate");
      std::string data_path = out_path(global, sim_out);
      std::string oracle_path = oracle_sibling(data_path);
      st = svpl_dataset_write_csv(ds.ptr, data_path.c_str(), oracle_path.c_str());
      if (st != SVPL_OK) return finish(st, "simulate");
      std::printf("wrote %s and %s\n", data_path.c_str(), oracle_path.c_str());
      return kExitOk;
    }

    if (*run_glb) {
      DatasetHandle ds;
      svpl_status st = svpl_dataset_read_csv(
          glb_data.c_str(), glb_oracle.empty() ? nullptr : glb_oracle.c_str(), &ds.ptr);
      if (st != SVPL_OK) return finish(st, "run-glb");
      json opts{{"alpha", glb_alpha},     {"learner", glb_learner},
                {"basis", glb_basis},     {"split_maxmin", !glb_no_split},
                {"knn_k", glb_k},         {"knn_bootstrap", glb_b}};
      if (global.seed) opts["seed"] = *global.seed;
      std::string out = out_path(global, glb_out);
      st = svpl_run_glb(ds.ptr, nullptr, opts.dump().c_str(), out.c_str());
      if (st != SVPL_OK) return finish(st, "run-glb");
      std::printf("wrote %s\n", out.c_str());
      return kExitOk;
    }

    if (*run_conf) {
      DatasetHandle ds;
      svpl_status st = svpl_dataset_read_csv(
          conf_data.c_str(), conf_oracle.empty() ? nullptr : conf_oracle.c_str(),
          &ds.ptr);
      if (st != SVPL_OK) return finish(st, "run-conformal");
      json opts{{"alpha", conf_alpha},
                {"r", conf_r},
                {"labeler", conf_labeler},
                {"label_basis", conf_label_basis},
                {"score_learner", conf_score},
                {"score_basis", conf_score_basis},
                {"diagnostics", conf_diag}};
      if (global.seed) opts["seed"] = *global.seed;
      std::string out = out_path(global, conf_out);
      st = svpl_run_conformal(ds.ptr, nullptr, opts.dump().c_str(), out.c_str());
      if (st != SVPL_OK) return finish(st, "run-conformal");
      std::printf("wrote %s\n", out.c_str());
      return kExitOk;
    }

    if (*evaluate) {
      DatasetHandle ds;
      std::string oracle = eval_oracle.empty() ? oracle_sibling(eval_data) : eval_oracle;
      svpl_status st = svpl_dataset_read_csv(eval_data.c_str(), oracle.c_str(), &ds.ptr);
      if (st != SVPL_OK) return finish(st, "evaluate");
      std::string report = out_path(global, eval_report);
      st = svpl_evaluate(ds.ptr, eval_sets.c_str(),
                         eval_meta.empty() ? nullptr : eval_meta.c_str(),
                         report.c_str());
      if (st != SVPL_OK) return finish(st, "evaluate");
      std::printf("wrote %s\n", report.c_str());
      return kExitOk;
    }

    if (*table1 || *sweep || *tradeoff) {
      json cfg = experiment_config(global);
      std::string out;
      svpl_status st = SVPL_OK;
      if (*table1) {
        out = out_path(global, table1_out);
        st = svpl_run_table1(cfg.dump().c_str(), out.c_str());
      } else if (*sweep) {
        out = out_path(global, sweep_out);
        st = svpl_run_sweep(cfg.dump().c_str(), out.c_str());
      } else {
        if (!cfg.contains("dgp")) cfg["dgp"] = json::object();
        cfg["dgp"]["secondary_outcome"] = true;
        out = out_path(global, tradeoff_out);
        st = svpl_run_tradeoff(cfg.dump().c_str(), out.c_str());
      }
      if (st != SVPL_OK) return finish(st, app.get_subcommands().front()->get_name());
      std::printf("wrote %s\n", out.c_str());
      return kExitOk;
    }

    if (*plot) {
      json opts{{"input", plot_input}, {"kind", plot_kind}, {"x", plot_x},
                {"y", plot_y},         {"title", plot_title}};
      if (!plot_value.empty()) opts["value"] = plot_value;
      if (!plot_series.empty()) opts["series"] = plot_series;
      if (!plot_filters.empty()) {
        json filter = json::object();
        for (const auto& f : plot_filters) {
          auto eq = f.find('=');
          if (eq == std::string::npos) {
            std::fprintf(stderr, "svpl: --where expects column=value, got '%s'\n",
                         f.c_str());
            return kExitConfig;
          }
          filter[f.substr(0, eq)] = f.substr(eq + 1);
        }
        opts["filter"] = filter;
      }
      std::string out = out_path(global, plot_out);
      svpl_status st = svpl_render_plot(opts.dump().c_str(), out.c_str());
      if (st != SVPL_OK) return finish(st, "plot");
      std::printf("wrote %s\n", out.c_str());
      return kExitOk;
    }

    if (*rbar) {
      json cfg = experiment_config(global);
      double estimate = 0.0;
      svpl_status st = svpl_run_rbar(cfg.dump().c_str(), &estimate);
      if (st != SVPL_OK) return finish(st, "rbar");
      std::printf("rbar_estimate,%.10g\n", estimate);
      if (!rbar_out.empty()) {
        std::string out = out_path(global, rbar_out);
        std::ofstream f(out, std::ios::binary);
        f << "rbar_estimate\n" << std::setprecision(10) << estimate << "\n";
      }
      return kExitOk;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "svpl: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
