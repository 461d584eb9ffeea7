#ifndef EVAFLOW_H
#define EVAFLOW_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes. The first four match the command-line exit codes.
 */
typedef enum EvaflowStatus {
  EVAFLOW_STATUS_OK = 0,
  EVAFLOW_STATUS_CHECK_FAILED = 1,
  EVAFLOW_STATUS_CONFIG = 2,
  EVAFLOW_STATUS_RUNTIME = 3,
  EVAFLOW_STATUS_NULL_POINTER = 4,
  EVAFLOW_STATUS_INVALID_UTF8 = 5,
  EVAFLOW_STATUS_OUT_OF_RANGE = 6,
  EVAFLOW_STATUS_PANIC = 7,
} EvaflowStatus;

/**
 * Which verification suite to run.
 */
typedef enum EvaflowSuite {
  EVAFLOW_SUITE_SURFACE = 0,
  EVAFLOW_SUITE_TRANSPORT = 1,
  EVAFLOW_SUITE_VARIATIONAL = 2,
  EVAFLOW_SUITE_MMS = 3,
} EvaflowSuite;

/**
 * Opaque report handle; case names are cached as C strings owned by the handle.
 */
typedef struct EvaflowReport EvaflowReport;

/**
 * Opaque simulation handle.
 */
typedef struct EvaflowSimulation EvaflowSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or an empty string. Valid until the next
 * evaflow call on the same thread.
 */
const char *evaflow_last_error(void);

/**
 * Create a simulation from a scenario config in JSON.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EvaflowStatus evaflow_simulation_new(const char *config_json, struct EvaflowSimulation **out);

/**
 * Create a simulation from a built-in preset name.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EvaflowStatus evaflow_simulation_from_preset(const char *name, struct EvaflowSimulation **out);

/**
 * Advance by `steps` steps (stopping early at the configured end).
 *
 * # Safety
 * `sim` must come from `evaflow_simulation_new` or `evaflow_simulation_from_preset`.
 */
enum EvaflowStatus evaflow_simulation_step(struct EvaflowSimulation *sim, size_t steps);

/**
 * Run to the configured end.
 *
 * # Safety
 * `sim` must be a valid handle.
 */
enum EvaflowStatus evaflow_simulation_run(struct EvaflowSimulation *sim);

/**
 * Current time.
 *
 * # Safety
 * `sim` must be a valid handle and `t` a valid pointer.
 */
enum EvaflowStatus evaflow_simulation_time(const struct EvaflowSimulation *sim, double *t);

/**
 * Number of phase-B cells.
 *
 * # Safety
 * `sim` must be a valid handle and `n` a valid pointer.
 */
enum EvaflowStatus evaflow_simulation_cells(const struct EvaflowSimulation *sim, size_t *n);

/**
 * Copy phase-B cell centers, densities, velocities and pressures into caller buffers of
 * length `len`, which must equal the cell count. Any buffer may be null to skip it.
 *
 * # Safety
 * Non-null buffers must hold `len` doubles.
 */
enum EvaflowStatus evaflow_simulation_phase_b(const struct EvaflowSimulation *sim,
                                              size_t len,
                                              double *grid,
                                              double *rho,
                                              double *vel,
                                              double *pressure);

/**
 * Mass-law residual and energy residual (relative to the kinetic-energy scale) over the
 * run so far.
 *
 * # Safety
 * `sim` must be a valid handle; output pointers must be valid.
 */
enum EvaflowStatus evaflow_simulation_residuals(const struct EvaflowSimulation *sim,
                                                double *mass,
                                                double *energy);

/**
 * Evaluate the configured checks; returns `CheckFailed` if any fails.
 *
 * # Safety
 * `sim` must be a valid handle; `tol_scale` must be positive.
 */
enum EvaflowStatus evaflow_simulation_check(const struct EvaflowSimulation *sim, double tol_scale);

/**
 * Release a simulation. Null is ignored.
 *
 * # Safety
 * `sim` must be null or a handle not yet freed.
 */
void evaflow_simulation_free(struct EvaflowSimulation *sim);

/**
 * Run the verification suite numbered as in [`EvaflowSuite`]. `config_json` may be null for
 * the defaults. On success `out` receives a report handle and the status is `Ok` or
 * `CheckFailed`.
 *
 * # Safety
 * `config_json` must be null or NUL-terminated; `out` must be valid.
 */
enum EvaflowStatus evaflow_suite_run(uint32_t suite,
                                     const char *config_json,
                                     uint64_t seed,
                                     double tol_scale,
                                     struct EvaflowReport **out);

/**
 * Number of cases in a report.
 *
 * # Safety
 * `report` must be a valid handle and `n` a valid pointer.
 */
enum EvaflowStatus evaflow_report_len(const struct EvaflowReport *report, size_t *n);

/**
 * Case `index`: its name (owned by the report), value, tolerance and pass flag. Null
 * output pointers are skipped.
 *
 * # Safety
 * `report` must be a valid handle; non-null outputs must be valid.
 */
enum EvaflowStatus evaflow_report_case(const struct EvaflowReport *report,
                                       size_t index,
                                       const char **name,
                                       double *value,
                                       double *tolerance,
                                       bool *pass);

/**
 * Report as a JSON string; release it with [`evaflow_string_free`]. Returns null on error.
 *
 * # Safety
 * `report` must be a valid handle.
 */
char *evaflow_report_json(const struct EvaflowReport *report);

/**
 * Release a report. Null is ignored.
 *
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void evaflow_report_free(struct EvaflowReport *report);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from `evaflow_report_json` not yet freed.
 */
void evaflow_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVAFLOW_H */
