#ifndef VRJP_H
#define VRJP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VrjpStatus {
  VRJP_STATUS_OK = 0,
  VRJP_STATUS_NULL_POINTER = 1,
  VRJP_STATUS_INVALID_ARGUMENT = 2,
  VRJP_STATUS_INVALID_INPUT = 3,
  VRJP_STATUS_DIMENSION_MISMATCH = 4,
  VRJP_STATUS_NUMERIC = 5,
  VRJP_STATUS_LIMIT = 6,
  VRJP_STATUS_PARSE = 7,
  VRJP_STATUS_BUFFER_TOO_SMALL = 8,
  VRJP_STATUS_PANIC = 9,
} VrjpStatus;

// Renormalization flow state with its own random stream.
typedef struct VrjpFlow VrjpFlow;

// Base graph with positive edge weights.
typedef struct VrjpGraph VrjpGraph;

// Decay bounds; entries that do not apply are NaN (or -1 for `m0`, `m1`).
typedef struct VrjpBounds {
  double phase1;
  double combined;
  double log_bound;
  int64_t m0;
  int64_t m1;
} VrjpBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *vrjp_version(void);

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len - 1` bytes) and returns its full length in bytes,
// excluding the terminator. `buf` may be null when `len` is 0.
//
// # Safety
// `buf` must be valid for `len` bytes.
size_t vrjp_last_error_message(char *buf, size_t len);

// Parses a graph from the JSON schema `{"vertices": [...], "edges": [[u, v, w], ...]}`.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum VrjpStatus vrjp_graph_from_json(const char *json, struct VrjpGraph **out);

// Builds a graph on vertices `0..n_vertices` from `n_edges` edges
// `(tails[k], heads[k], weights[k])`.
//
// # Safety
// The three arrays must hold `n_edges` entries; `out` must be writable.
enum VrjpStatus vrjp_graph_from_edges(size_t n_vertices,
                                      const uint32_t *tails,
                                      const uint32_t *heads,
                                      const double *weights,
                                      size_t n_edges,
                                      struct VrjpGraph **out);

// # Safety
// `graph` must come from a `vrjp_graph_*` constructor and not be freed yet.
void vrjp_graph_free(struct VrjpGraph *graph);

// # Safety
// `graph` must be a live handle and `out` writable.
enum VrjpStatus vrjp_graph_counts(const struct VrjpGraph *graph,
                                  size_t *n_vertices,
                                  size_t *n_edges);

// Draws `n_samples` β-fields; `out` receives them row-major,
// `n_samples * n_vertices` values. Identical seeds give identical output.
//
// # Safety
// `graph` must be live; `out` must hold `out_len` doubles.
enum VrjpStatus vrjp_sample_beta(const struct VrjpGraph *graph,
                                 uint64_t seed,
                                 size_t n_samples,
                                 double *out,
                                 size_t out_len);

// Effective weights on the vertex subset `subset` given a β on all vertices.
// `out` receives the `k x k` matrix row-major, `k = subset_len`; the
// diagonal holds the self-loop weights.
//
// # Safety
// `beta` must hold `n_vertices` doubles, `subset` `subset_len` indices and
// `out` `out_len` doubles.
enum VrjpStatus vrjp_effective_weights(const struct VrjpGraph *graph,
                                       const double *beta,
                                       size_t beta_len,
                                       const uint32_t *subset,
                                       size_t subset_len,
                                       double *out,
                                       size_t out_len);

// Starts a flow at level `r` with i.i.d. weights drawn from `dist`
// (`"gamma:a=<shape>"` or `"const:w=<value>"`).
//
// # Safety
// `graph` must be live, `dist` NUL-terminated and `out` writable.
enum VrjpStatus vrjp_flow_new(const struct VrjpGraph *graph,
                              uint32_t r,
                              const char *dist,
                              uint64_t seed,
                              struct VrjpFlow **out);

// Starts a flow at level `r` from explicit weights, `n_edges * 2^r` values
// with the pieces of each base edge contiguous and in order.
//
// # Safety
// `graph` must be live, `weights` must hold `len` doubles, `out` writable.
enum VrjpStatus vrjp_flow_from_weights(const struct VrjpGraph *graph,
                                       uint32_t r,
                                       const double *weights,
                                       size_t len,
                                       uint64_t seed,
                                       struct VrjpFlow **out);

// # Safety
// `flow` must come from a `vrjp_flow_*` constructor and not be freed yet.
void vrjp_flow_free(struct VrjpFlow *flow);

// Lowers the flow by one level. Fails with `VRJP_STATUS_LIMIT` at level 0.
//
// # Safety
// `flow` must be live.
enum VrjpStatus vrjp_flow_step(struct VrjpFlow *flow);

// # Safety
// `flow` must be live and `level` writable.
enum VrjpStatus vrjp_flow_level(const struct VrjpFlow *flow, uint32_t *level);

// Natural logs of the current weights, `n_edges * 2^level` values in the
// layout of [`vrjp_flow_from_weights`]. Logs avoid underflow deep in the flow.
//
// # Safety
// `flow` must be live and `out` must hold `out_len` doubles.
enum VrjpStatus vrjp_flow_log_weights(const struct VrjpFlow *flow, double *out, size_t out_len);

// Decay bounds from level `r` to `l`. Pass NaN for a moment that is unknown;
// at least one of `moment` (E[W^alpha]) and `mean_log` (E[ln W]) is needed.
//
// # Safety
// `out` must be writable.
enum VrjpStatus vrjp_moment_bound(double alpha,
                                  double moment,
                                  double mean_log,
                                  uint32_t r,
                                  uint32_t l,
                                  struct VrjpBounds *out);

// `E[X^alpha]` for the inverse Gaussian variable of parameter `w`.
//
// # Safety
// `out` must be writable.
enum VrjpStatus vrjp_frac_moment(double w, double alpha, double *out);

// `E[ln X]` for the inverse Gaussian variable of parameter `w`.
//
// # Safety
// `out` must be writable.
enum VrjpStatus vrjp_log_moment(double w, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VRJP_H */
