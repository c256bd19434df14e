/* declink — decentralized link scheduling for interference channels.
 *
 * C API for the shared library. All functions return a dlk_status; handles
 * are opaque and must be released with their matching _free call. On
 * failure, dlk_last_error() returns a thread-local description of what went
 * wrong.
 */
#ifndef DECLINK_H
#define DECLINK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define DLK_API __declspec(dllexport)
#else
#define DLK_API __attribute__((visibility("default")))
#endif

typedef enum dlk_status {
  DLK_OK = 0,
  DLK_ERR_INVALID_ARGUMENT = 1,
  DLK_ERR_DOMAIN = 2,     /* value outside its mathematical domain */
  DLK_ERR_DIMENSION = 3,  /* matrix/vector shape mismatch */
  DLK_ERR_CAPACITY = 4,   /* K too large for exhaustive enumeration */
  DLK_ERR_PARSE = 5,
  DLK_ERR_VALIDATION = 6,
  DLK_ERR_IO = 7,
  DLK_ERR_DIVERGED = 8,   /* training produced a non-finite objective */
  DLK_ERR_INTERNAL = 9
} dlk_status;

typedef enum dlk_policy_kind {
  DLK_POLICY_CDNN = 0,
  DLK_POLICY_LOCALLY_ROBUST = 1,
  DLK_POLICY_NAIVE = 2,
  DLK_POLICY_PERFECT_CSI = 3,
  DLK_POLICY_TDMA = 4,
  DLK_POLICY_ALWAYS_ON = 5
} dlk_policy_kind;

/* Opaque handles. */
typedef struct dlk_scenario dlk_scenario;
typedef struct dlk_policies dlk_policies;

DLK_API const char* dlk_version(void);
DLK_API const char* dlk_status_name(dlk_status status);

/* Thread-local message for the most recent failure in this thread. */
DLK_API const char* dlk_last_error(void);

/* ---- scenarios ------------------------------------------------------- */

DLK_API int dlk_preset_count(void);
DLK_API const char* dlk_preset_name(int index); /* NULL when out of range */

DLK_API dlk_status dlk_scenario_preset(const char* name, dlk_scenario** out);
DLK_API dlk_status dlk_scenario_load(const char* path, dlk_scenario** out);
DLK_API void dlk_scenario_free(dlk_scenario* scenario);

DLK_API int dlk_scenario_k_users(const dlk_scenario* scenario);
DLK_API const char* dlk_scenario_name(const dlk_scenario* scenario);

/* JSON rendering of a scenario; free the string with dlk_string_free. */
DLK_API dlk_status dlk_scenario_json(const dlk_scenario* scenario, char** out);
DLK_API void dlk_string_free(char* s);

/* ---- channel & rate primitives --------------------------------------- */

/* Matrices are row-major length k*k buffers; entry (i,j) is the gain from
 * TX j to RX i. */
DLK_API dlk_status dlk_sigma_bar(int k, const double* sigma, double* out);
DLK_API dlk_status dlk_sum_rate(int k, const double* gains, const double* powers,
                                double noise_power, double* rate_out);
/* decisions_out[j] = 1 when TX j transmits in the enumerated optimum. */
DLK_API dlk_status dlk_exhaustive_best(int k, const double* gains, double p_max,
                                       double noise_power, uint8_t* decisions_out);

/* ---- training, checkpoints, evaluation ------------------------------- */

/* Trains the learned policy (DLK_POLICY_CDNN or DLK_POLICY_LOCALLY_ROBUST)
 * at one sigma point. Seeds derive from (seed, sigma index 0), matching a
 * one-point sweep grid. With pretrain_only, stops after the supervised
 * initialization. checkpoint_dir may be NULL; when set, periodic
 * checkpoints land there. */
DLK_API dlk_status dlk_train(const dlk_scenario* scenario, dlk_policy_kind kind,
                             double sigma, uint64_t seed, int pretrain_only,
                             const char* checkpoint_dir, dlk_policies** out);

DLK_API void dlk_policies_free(dlk_policies* policies);
DLK_API dlk_status dlk_policies_save(const dlk_policies* policies, const char* path);
DLK_API dlk_status dlk_policies_load(const char* path, dlk_policies** out);
DLK_API int dlk_policies_k_users(const dlk_policies* policies);
DLK_API dlk_status dlk_policies_kind(const dlk_policies* policies, dlk_policy_kind* out);

/* Deployed binary decision of TX tx (0-based) for a row-major k*k estimate. */
DLK_API dlk_status dlk_policies_decide(const dlk_policies* policies, int tx,
                                       const double* estimate, uint8_t* on_out);

/* Per-step training objective curves recorded by dlk_train: one curve for
 * CDNN, one per TX for locally robust training. */
DLK_API int dlk_objective_count(const dlk_policies* policies);
DLK_API dlk_status dlk_objective_curve(const dlk_policies* policies, int index,
                                       const double** data_out, int* len_out);

typedef struct dlk_eval_report {
  double expected_sum_rate;
  double ci_halfwidth; /* 95% normal approximation on the mean rate */
  int n_eval;
} dlk_eval_report;

/* Scores one policy on a freshly drawn evaluation set. For baselines pass
 * policies = NULL; for learned policies the handle overrides kind.
 * tx_fractions_out, when non-NULL, must hold k_users doubles. */
DLK_API dlk_status dlk_evaluate(const dlk_scenario* scenario, double sigma, uint64_t seed,
                                dlk_policy_kind kind, const dlk_policies* policies,
                                dlk_eval_report* report_out, double* tx_fractions_out);

/* ---- sweeps ----------------------------------------------------------- */

/* Parses the "a:b:step" grid syntax into out (written count in len_out).
 * Fails with DLK_ERR_CAPACITY when the grid exceeds capacity. */
DLK_API dlk_status dlk_sigma_grid_parse(const char* spec, double* out, int capacity,
                                        int* len_out);

/* Runs every grid point (training the learned policies per point), writes
 * the CSV to csv_path, and is byte-reproducible for a fixed scenario, grid,
 * and seed regardless of jobs. checkpoint_dir may be NULL. */
DLK_API dlk_status dlk_sweep_run(const dlk_scenario* scenario, const double* sigma_grid,
                                 int grid_len, uint64_t seed, const char* csv_path,
                                 int jobs, const char* checkpoint_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DECLINK_H */
