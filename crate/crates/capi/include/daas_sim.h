#ifndef DAAS_SIM_H
#define DAAS_SIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Queue discipline selector.
 */
typedef enum {
  DSIM_DISCIPLINE_FIFO = 0,
  DSIM_DISCIPLINE_IRA = 1,
} DsimDiscipline;

/**
 * Result code of every API call.
 */
typedef enum {
  DSIM_STATUS_OK = 0,
  DSIM_STATUS_NULL_POINTER = 1,
  DSIM_STATUS_INVALID_UTF8 = 2,
  DSIM_STATUS_PARSE_ERROR = 3,
  DSIM_STATUS_INVALID_ARGUMENT = 4,
  DSIM_STATUS_RUN_ERROR = 5,
} DsimStatus;

/**
 * Opaque finished run.
 */
typedef struct DsimRun DsimRun;

/**
 * Opaque parsed scenario.
 */
typedef struct DsimScenario DsimScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or null.
 * The pointer stays valid until the next API call on the same thread.
 */
const char *dsim_last_error_message(void);

/**
 * Library version as a static string; never freed.
 */
const char *dsim_version(void);

/**
 * Create a scenario with the built-in defaults.
 * # Safety
 * `out` must be valid for writing a pointer.
 */
DsimStatus dsim_scenario_default(DsimScenario **out);

/**
 * Parse scenario text (same `key = value` format as the CLI accepts).
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` valid for
 * writing a pointer.
 */
DsimStatus dsim_scenario_parse(const char *text, DsimScenario **out);

/**
 * # Safety
 * `scenario` must be null or a live handle from this library.
 */
DsimStatus dsim_scenario_set_seed(DsimScenario *scenario, uint64_t seed);

/**
 * # Safety
 * `scenario` must be null or a live handle from this library.
 */
DsimStatus dsim_scenario_set_discipline(DsimScenario *scenario, DsimDiscipline discipline);

/**
 * # Safety
 * `scenario` must be null or a live handle from this library.
 */
DsimStatus dsim_scenario_set_beta(DsimScenario *scenario, double beta);

/**
 * # Safety
 * `scenario` must be null or an owned handle from this library, not
 * freed before.
 */
void dsim_scenario_free(DsimScenario *scenario);

/**
 * Simulate the scenario. On success the caller owns the returned run.
 * # Safety
 * `scenario` must be null or a live handle; `out` valid for writing a
 * pointer.
 */
DsimStatus dsim_run(const DsimScenario *scenario, DsimRun **out);

/**
 * # Safety
 * `run` must be null or an owned handle from this library, not freed
 * before.
 */
void dsim_run_free(DsimRun *run);

/**
 * The event trace as CSV text; free with `dsim_string_free`.
 * # Safety
 * `run` must be null or a live handle; `out` valid for writing a
 * pointer.
 */
DsimStatus dsim_run_trace_csv(const DsimRun *run, char **out);

/**
 * Per-class metrics as CSV text; free with `dsim_string_free`.
 * # Safety
 * `run` must be null or a live handle; `out` valid for writing a
 * pointer.
 */
DsimStatus dsim_run_metrics_csv(const DsimRun *run, char **out);

/**
 * Mean wait in seconds for a priority class, or the aggregate for class 0.
 * # Safety
 * `run` must be null or a live handle; `out` valid for writing a double.
 */
DsimStatus dsim_run_mean_wait(const DsimRun *run, uint8_t class_, double *out);

/**
 * SLA violation rate for a priority class, or the aggregate for class 0.
 * # Safety
 * `run` must be null or a live handle; `out` valid for writing a double.
 */
DsimStatus dsim_run_violation_rate(const DsimRun *run, uint8_t class_, double *out);

/**
 * Requests in a priority class, or all requests for class 0.
 * # Safety
 * `run` must be null or a live handle; `out` valid for writing a u64.
 */
DsimStatus dsim_run_request_count(const DsimRun *run, uint8_t class_, uint64_t *out);

/**
 * Run-level utilization fractions.
 * # Safety
 * `run` must be null or a live handle; all out-pointers valid for
 * writing doubles.
 */
DsimStatus dsim_run_utilization(const DsimRun *run,
                                double *reserved,
                                double *actual,
                                double *overload_fraction);

/**
 * Release a string produced by this library.
 * # Safety
 * `text` must be null or a string returned by this library, not freed
 * before.
 */
void dsim_string_free(char *text);

/**
 * Convenience: set the policy on an already-parsed scenario, run both
 * disciplines over the identical workload, and report whether the
 * priority discipline kept classes 1..3 at or below the baseline's
 * violation rates.
 * # Safety
 * `scenario` must be null or a live handle; `out` valid for writing a
 * bool.
 */
DsimStatus dsim_compare_p123_not_worse(const DsimScenario *scenario, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DAAS_SIM_H */
