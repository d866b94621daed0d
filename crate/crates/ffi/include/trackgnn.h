/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef TRACKGNN_H
#define TRACKGNN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TgMode {
  TG_MODE_REAL = 0,
  TG_MODE_FIXED = 1,
} TgMode;

typedef enum TgStatus {
  TG_STATUS_OK = 0,
  TG_STATUS_NULL_POINTER = 1,
  TG_STATUS_INVALID_ARGUMENT = 2,
  TG_STATUS_PARSE_ERROR = 3,
  TG_STATUS_INVALID_GRAPH = 4,
  TG_STATUS_IO_ERROR = 5,
  TG_STATUS_SIMULATION_ERROR = 6,
  TG_STATUS_BUFFER_TOO_SMALL = 7,
  TG_STATUS_PANIC = 8,
} TgStatus;

typedef enum TgVariant {
  TG_VARIANT_MPA = 0,
  TG_VARIANT_GEO = 1,
  TG_VARIANT_GEO_RSRC = 2,
} TgVariant;

/**
 * Opaque hit graph.
 */
typedef struct TgGraph TgGraph;

/**
 * Opaque model parameters.
 */
typedef struct TgParams TgParams;

/**
 * Timing of one simulated configuration.
 */
typedef struct TgSimSummary {
  uint64_t latency_cycles;
  uint64_t interval_cycles;
  double latency_us;
  double interval_us;
  double throughput_mgps;
  /**
   * 1 if throughput exceeds the trigger requirement.
   */
  int32_t meets_requirement;
} TgSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *tg_last_error_message(void);

/**
 * Library version, static storage.
 */
const char *tg_version(void);

/**
 * # Safety
 * `file` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TgStatus tg_graph_load(const char *file, struct TgGraph **out);

/**
 * # Safety
 * `graph` must come from this library; `file` must be NUL-terminated.
 */
enum TgStatus tg_graph_save(const struct TgGraph *graph, const char *file);

/**
 * Synthetic graph. `n_nodes == 0` selects the nominal 739-node profile;
 * otherwise a random profile with about 1.7 edges per node.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TgStatus tg_graph_generate(uint64_t seed, size_t n_nodes, struct TgGraph **out);

/**
 * # Safety
 * `graph` must come from this library or be null; it is invalid afterwards.
 */
void tg_graph_free(struct TgGraph *graph);

/**
 * # Safety
 * `graph` must come from this library or be null (returns 0).
 */
size_t tg_graph_num_nodes(const struct TgGraph *graph);

/**
 * # Safety
 * `graph` must come from this library or be null (returns 0).
 */
size_t tg_graph_num_edges(const struct TgGraph *graph);

/**
 * Stores the number of diagnostics in `n_diagnostics`. Returns
 * `INVALID_GRAPH` with the report as the error message if there are any.
 *
 * # Safety
 * `graph` must come from this library; `n_diagnostics` may be null.
 */
enum TgStatus tg_graph_validate(const struct TgGraph *graph, size_t *n_diagnostics);

/**
 * Random weights for the default model shape.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TgStatus tg_params_random(uint64_t seed, struct TgParams **out);

/**
 * # Safety
 * `file` must be NUL-terminated and `out` a valid pointer.
 */
enum TgStatus tg_params_load(const char *file, struct TgParams **out);

/**
 * # Safety
 * `params` must come from this library or be null.
 */
void tg_params_free(struct TgParams *params);

/**
 * Edge scores written to `scores[0..n_edges]`. Fixed-mode scores are exact
 * Q7.7 values.
 *
 * # Safety
 * Handles must come from this library; `scores` must hold `len` doubles.
 */
enum TgStatus tg_infer(const struct TgGraph *graph,
                       const struct TgParams *params,
                       enum TgMode mode,
                       uint32_t iterations,
                       double *scores,
                       size_t len);

/**
 * Like [`tg_infer`], group by group on the partitioned graph.
 *
 * # Safety
 * As for [`tg_infer`].
 */
enum TgStatus tg_infer_partitioned(const struct TgGraph *graph,
                                   const struct TgParams *params,
                                   enum TgMode mode,
                                   uint32_t iterations,
                                   double *scores,
                                   size_t len);

/**
 * Simulates a variant on the nominal workload, or on `graph` if not null.
 * `pes == 0` picks 8 for MPA and 1 otherwise. `calibrated == 0` uses the
 * stock cost model.
 *
 * # Safety
 * `graph` must be null or come from this library; `out` must be valid.
 */
enum TgStatus tg_simulate(enum TgVariant v,
                          const struct TgGraph *graph,
                          uint32_t pes,
                          double clock_mhz,
                          int32_t calibrated,
                          struct TgSimSummary *out);

/**
 * Data-aware PEs per group type. `node_sizes` holds A, B; `edge_sizes`
 * holds A-A, A-B, B-B; `out` receives A, B, A-A, A-B, B-B.
 *
 * # Safety
 * The arrays must hold 2, 3 and 5 elements.
 */
enum TgStatus tg_allocate_data_aware(const size_t *node_sizes,
                                     const size_t *edge_sizes,
                                     uint32_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRACKGNN_H */
