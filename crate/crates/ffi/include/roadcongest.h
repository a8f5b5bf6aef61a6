#ifndef ROADCONGEST_H
#define ROADCONGEST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_NULL_POINTER = 1,
  RC_STATUS_INVALID_ARGUMENT = 2,
  RC_STATUS_VALIDATION = 3,
  RC_STATUS_PREREQUISITE = 4,
  RC_STATUS_IO = 5,
  RC_STATUS_RUNTIME = 6,
  RC_STATUS_OUT_OF_RANGE = 7,
  RC_STATUS_PANIC = 8,
} RcStatus;

// Ranked dependency pairs read back from a discover run.
typedef struct RcDiscovery RcDiscovery;

// Road graph loaded from a unit CSV.
typedef struct RcGraph RcGraph;

// Configured pipeline bound to an output directory.
typedef struct RcPipeline RcPipeline;

// One ranked dependency between two persistent subgraphs.
typedef struct RcPair {
  uint32_t sg1_id;
  uint32_t sg2_id;
  double mi_bits;
  double dist_m;
  double score;
} RcPair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null after a success.
// The pointer stays valid until the next call on the same thread.
const char *rc_last_error_message(void);

// Load of a unit with speed limit `limit_kmh` observed at `speed_kmh`, in [0, 1].
//
// # Safety
// `out` must be null or point to writable memory for one `double`.
enum RcStatus rc_unit_load(double limit_kmh, double speed_kmh, double *out);

// Mutual information in bits between two binary series of length `len`.
// Any non-zero byte counts as true.
//
// # Safety
// `x` and `y` must each point to `len` readable bytes; `out` to one `double`.
enum RcStatus rc_mutual_information(const uint8_t *x, const uint8_t *y, size_t len, double *out);

// Load a road graph from a unit CSV file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum RcStatus rc_graph_load(const char *path, struct RcGraph **out);

// Number of units in the graph.
//
// # Safety
// `graph` must come from [`rc_graph_load`]; `out` must be writable.
enum RcStatus rc_graph_unit_count(const struct RcGraph *graph, size_t *out);

// Release a graph. Null is ignored.
//
// # Safety
// `graph` must come from [`rc_graph_load`] and not be used afterwards.
void rc_graph_free(struct RcGraph *graph);

// Build a pipeline from an optional TOML file and `n_overrides` dotted
// `key=value` overrides. `config_path` may be null to start from defaults.
//
// # Safety
// Non-null strings must be NUL-terminated; `overrides` must hold
// `n_overrides` string pointers; `out` must be writable.
enum RcStatus rc_pipeline_new(const char *config_path,
                              const char *const *overrides,
                              size_t n_overrides,
                              struct RcPipeline **out);

// Run one stage by name (`synth`, `ingest`, ..., `eval` or `all`).
//
// # Safety
// `pipeline` must come from [`rc_pipeline_new`]; `stage` must be NUL-terminated.
enum RcStatus rc_pipeline_run(const struct RcPipeline *pipeline, const char *stage);

// Read the ranked pairs produced by the discover stage.
//
// # Safety
// `pipeline` must come from [`rc_pipeline_new`]; `out` must be writable.
enum RcStatus rc_pipeline_discovery(const struct RcPipeline *pipeline, struct RcDiscovery **out);

// Release a pipeline. Null is ignored.
//
// # Safety
// `pipeline` must come from [`rc_pipeline_new`] and not be used afterwards.
void rc_pipeline_free(struct RcPipeline *pipeline);

// Number of ranked pairs.
//
// # Safety
// `d` must come from [`rc_pipeline_discovery`]; `out` must be writable.
enum RcStatus rc_discovery_len(const struct RcDiscovery *d, size_t *out);

// Pair at zero-based `rank`, best first.
//
// # Safety
// `d` must come from [`rc_pipeline_discovery`]; `out` must be writable.
enum RcStatus rc_discovery_get(const struct RcDiscovery *d, size_t rank, struct RcPair *out);

// Release discovery results. Null is ignored.
//
// # Safety
// `d` must come from [`rc_pipeline_discovery`] and not be used afterwards.
void rc_discovery_free(struct RcDiscovery *d);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROADCONGEST_H */
