#ifndef PCN_REBALANCE_H
#define PCN_REBALANCE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PcnStatus {
  PCN_STATUS_OK = 0,
  PCN_STATUS_NULL_POINTER = 1,
  PCN_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed JSON or an argument the library rejects.
   */
  PCN_STATUS_INVALID_INPUT = 3,
  /**
   * A broken internal invariant or a caught panic.
   */
  PCN_STATUS_INTERNAL_ERROR = 4,
} PcnStatus;

/**
 * Cycle decomposition of a solved circulation.
 */
typedef struct PcnDecomposition PcnDecomposition;

/**
 * A validated rebalancing instance.
 */
typedef struct PcnInstance PcnInstance;

/**
 * Result of solving an instance.
 */
typedef struct PcnReport PcnReport;

/**
 * All artifacts of a full pipeline run.
 */
typedef struct PcnRun PcnRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *pcn_last_error(void);

/**
 * Library version as a static string.
 */
const char *pcn_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a string obtained from this library, freed once.
 */
void pcn_string_free(char *s);

/**
 * Parses and validates an instance from JSON.
 *
 * # Safety
 * `json` must be a valid C string and `out` a writable pointer.
 */
enum PcnStatus pcn_instance_from_json(const char *json, struct PcnInstance **out);

/**
 * # Safety
 * `instance` must be NULL or a handle from [`pcn_instance_from_json`].
 */
void pcn_instance_free(struct PcnInstance *instance);

/**
 * Number of nodes; 0 for NULL.
 *
 * # Safety
 * `instance` must be NULL or a live handle.
 */
size_t pcn_instance_node_count(const struct PcnInstance *instance);

/**
 * Number of edges with positive capacity; 0 for NULL.
 *
 * # Safety
 * `instance` must be NULL or a live handle.
 */
size_t pcn_instance_edge_count(const struct PcnInstance *instance);

/**
 * Solves for a max-weight circulation. A negative `iteration_bound` solves
 * to optimality; otherwise at most that many improving cycles are applied.
 *
 * # Safety
 * `instance` must be a live handle and `out` a writable pointer.
 */
enum PcnStatus pcn_solve(const struct PcnInstance *instance,
                         int64_t iteration_bound,
                         struct PcnReport **out);

/**
 * # Safety
 * `report` must be NULL or a handle from [`pcn_solve`].
 */
void pcn_report_free(struct PcnReport *report);

/**
 * Objective `sum(w * f)`; 0 for NULL.
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
uint64_t pcn_report_objective(const struct PcnReport *report);

/**
 * Whether an iteration bound stopped the solve before optimality.
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
bool pcn_report_terminated_early(const struct PcnReport *report);

/**
 * The circulation as JSON; free the result with [`pcn_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` a writable pointer.
 */
enum PcnStatus pcn_report_circulation_json(const struct PcnReport *report, char **out);

/**
 * Splits the report's circulation into cycle flows.
 *
 * # Safety
 * `report` must be a live handle and `out` a writable pointer.
 */
enum PcnStatus pcn_decompose(const struct PcnReport *report, struct PcnDecomposition **out);

/**
 * # Safety
 * `d` must be NULL or a handle from [`pcn_decompose`].
 */
void pcn_decomposition_free(struct PcnDecomposition *d);

/**
 * Number of cycles; 0 for NULL.
 *
 * # Safety
 * `d` must be NULL or a live handle.
 */
size_t pcn_decomposition_cycle_count(const struct PcnDecomposition *d);

/**
 * The cycles as JSON; free the result with [`pcn_string_free`].
 *
 * # Safety
 * `d` must be a live handle and `out` a writable pointer.
 */
enum PcnStatus pcn_decomposition_json(const struct PcnDecomposition *d, char **out);

/**
 * Graphviz rendering of the decomposition; free with [`pcn_string_free`].
 *
 * # Safety
 * `d` must be a live handle and `out` a writable pointer.
 */
enum PcnStatus pcn_decomposition_dot(const struct PcnDecomposition *d, char **out);

/**
 * Runs the full pipeline: solve (privately if `mpc`), decompose and execute
 * every cycle. `k` is the delegate count for the private solve, a negative
 * `iteration_bound` means no bound, and `adversary_json` may be NULL for an
 * all-honest run.
 *
 * # Safety
 * `instance` must be a live handle, `adversary_json` NULL or a valid C
 * string, and `out` a writable pointer.
 */
enum PcnStatus pcn_run(const struct PcnInstance *instance,
                       uint64_t seed,
                       bool mpc,
                       size_t k,
                       int64_t iteration_bound,
                       const char *adversary_json,
                       struct PcnRun **out);

/**
 * # Safety
 * `run` must be NULL or a handle from [`pcn_run`].
 */
void pcn_run_free(struct PcnRun *run);

/**
 * Objective of the run's circulation; 0 for NULL.
 *
 * # Safety
 * `run` must be NULL or a live handle.
 */
uint64_t pcn_run_objective(const struct PcnRun *run);

/**
 * Contents of one artifact by file name, e.g. `"ledger.json"`. Unknown
 * names (including `"transcript.txt"` on a plaintext run) are
 * `PCN_STATUS_INVALID_INPUT`.
 *
 * # Safety
 * `run` must be a live handle, `name` a valid C string and `out` a writable
 * pointer.
 */
enum PcnStatus pcn_run_artifact(const struct PcnRun *run, const char *name, char **out);

/**
 * Re-validates run artifacts. `decomposition_json` and `ledger_json` may be
 * NULL. Writes whether all checks passed to `ok` and, if `reasons` is not
 * NULL, a JSON array of failure reasons to free with [`pcn_string_free`].
 *
 * # Safety
 * Pointers must be NULL where allowed, valid C strings otherwise; `ok` must
 * be writable.
 */
enum PcnStatus pcn_verify(const struct PcnInstance *instance,
                          const char *circulation_json,
                          const char *decomposition_json,
                          const char *ledger_json,
                          bool *ok,
                          char **reasons);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCN_REBALANCE_H */
