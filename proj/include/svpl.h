/* svpl: set-valued treatment-policy learning, C interface.
 *
 * All functions return svpl_status; on failure, svpl_last_error() carries a
 * thread-local description of what went wrong. Handles are opaque and must
 * be released with their matching _free call. JSON options follow the schema
 * documented in the project README.
 */
#ifndef SVPL_H
#define SVPL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum svpl_status {
  SVPL_OK = 0,
  SVPL_ERR_INVALID_ARGUMENT = 1,
  SVPL_ERR_CONFIG = 2,
  SVPL_ERR_IO = 3,
  SVPL_ERR_NUMERICAL = 4,
  SVPL_ERR_EMPTY_FOLD = 5,
  SVPL_ERR_ARM_UNDERFLOW = 6,
  SVPL_ERR_ORACLE_REQUIRED = 7,
  SVPL_ERR_DEGENERATE_DENOMINATOR = 8,
  SVPL_ERR_INTERNAL = 9
} svpl_status;

typedef struct svpl_dataset svpl_dataset;

const char* svpl_version(void);

/* Message for the most recent failing call on this thread; empty string when
 * no failure has been recorded. */
const char* svpl_last_error(void);

/* --- datasets ------------------------------------------------------- */

/* Draw the synthetic benchmark. config_json keys (all optional):
 *   n, d, arms, noise_sd, seed, secondary_outcome, tie_tol */
svpl_status svpl_simulate(const char* config_json, svpl_dataset** out);

/* data CSV schema: x1,...,xd,a,y[,y1,...,yK]; arms 1-based.
 * oracle_path may be NULL. */
svpl_status svpl_dataset_read_csv(const char* data_path, const char* oracle_path,
                                  svpl_dataset** out);
svpl_status svpl_dataset_write_csv(const svpl_dataset* ds, const char* data_path,
                                   const char* oracle_path);

int64_t svpl_dataset_num_rows(const svpl_dataset* ds);
int32_t svpl_dataset_num_covariates(const svpl_dataset* ds);
int32_t svpl_dataset_num_arms(const svpl_dataset* ds);
int32_t svpl_dataset_has_oracle(const svpl_dataset* ds);
void svpl_dataset_free(svpl_dataset* ds);

/* --- single-run policies -------------------------------------------- */

/* Fit on `ds`, write one set per row of `eval` (or of `ds` when eval is
 * NULL) to out_sets_csv, plus a sidecar meta JSON at <out>.meta.json.
 * options_json keys: alpha, learner (ols|knn), basis, knn_k, knn_bootstrap,
 * split_maxmin, fractions [b,train,cal], seed. */
svpl_status svpl_run_glb(const svpl_dataset* ds, const svpl_dataset* eval,
                         const char* options_json, const char* out_sets_csv);

/* options_json keys: alpha, r, labeler (qlearn|qlearn-iw), label_basis,
 * score_learner (ols|knn), score_basis, knn_k, knn_bootstrap, fractions,
 * seed, diagnostics (bool; writes <out>.diag.csv, needs oracle truth). */
svpl_status svpl_run_conformal(const svpl_dataset* ds, const svpl_dataset* eval,
                               const char* options_json, const char* out_sets_csv);

/* Score sets (from a sets CSV) against oracle truth carried by `ds`;
 * meta_json (may be NULL) supplies method/alpha/r/delta_at_qhat for the
 * report columns. */
svpl_status svpl_evaluate(const svpl_dataset* ds, const char* sets_csv,
                          const char* meta_json, const char* out_report_csv);

/* Randomness level required for coverage, estimated by oracle simulation.
 * options_json keys: alpha, reps, labeler, label_basis, score_learner,
 * score_basis, knn_k, knn_bootstrap, fractions, seed. */
svpl_status svpl_estimate_rbar(const svpl_dataset* ds, const char* options_json,
                               double* out_rbar);

/* --- experiment drivers ---------------------------------------------- */

/* config_json: full experiment schema (see README). Each writes one CSV. */
svpl_status svpl_run_table1(const char* config_json, const char* out_csv);
svpl_status svpl_run_sweep(const char* config_json, const char* out_csv);
svpl_status svpl_run_tradeoff(const char* config_json, const char* out_csv);
svpl_status svpl_run_rbar(const char* config_json, double* out_rbar);

/* Render a line chart or heatmap from an emitted CSV to a standalone SVG.
 * options_json keys: input (CSV path), kind ("line"|"heatmap"), x, y,
 * value (heatmap cell metric), series (array of grouping columns),
 * filter (object: column -> required cell string), title, width, height. */
svpl_status svpl_render_plot(const char* options_json, const char* out_svg);

#ifdef __cplusplus
}
#endif

#endif /* SVPL_H */
