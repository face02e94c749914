#ifndef PAINTWALK_H
#define PAINTWALK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Marking rule, passed as `uint32_t`.
#define PW_MODE_FIRST_PAINTED 0

#define PW_MODE_LAST_PAINTED 1

// Status codes.
typedef enum PwStatus {
  PW_STATUS_OK = 0,
  PW_STATUS_NULL_POINTER = 1,
  PW_STATUS_INVALID_ARGUMENT = 2,
  PW_STATUS_SIZE_CAP = 3,
  PW_STATUS_INVALID_VERTEX = 4,
  PW_STATUS_BUFFER_TOO_SMALL = 5,
  PW_STATUS_STEP_CAP = 6,
  PW_STATUS_NUMERICAL = 7,
  PW_STATUS_IO = 8,
  PW_STATUS_PANIC = 9,
} PwStatus;

// Opaque graph handle.
typedef struct PwGraph PwGraph;

// One painting run.
typedef struct PwOutcome {
  uint64_t a1_count;
  uint64_t a2_count;
  uint64_t tie_count;
  uint64_t wins1;
  uint64_t wins2;
  int64_t b_statistic;
  uint64_t cover_time;
  uint64_t boundary_edges;
} PwOutcome;

// Aggregate of a batch. Moments are NaN when fewer than two runs completed.
typedef struct PwBatchSummary {
  uint64_t runs_completed;
  uint64_t runs_missing;
  double a1_mean;
  double a1_variance;
  double b_variance;
  double tie_fraction_mean;
  double cover_time_mean;
} PwBatchSummary;

// Exact hitting-table statistics.
typedef struct PwExactSummary {
  uint64_t t_mix;
  uint64_t horizon;
  double f_bar;
  double f_statistic;
  // `F / 4`; NaN when `c < 2`.
  double quarter_f;
} PwExactSummary;

// Builds a graph from a spec string such as `"torus:d=3,n=8"`.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` a writable pointer.
enum PwStatus pw_graph_new(const char *spec, struct PwGraph **out);

// Releases a handle; null is ignored.
//
// # Safety
// `g` must come from [`pw_graph_new`] and not be used afterwards.
void pw_graph_free(struct PwGraph *g);

// # Safety
// `g` must be a live handle and `out` writable.
enum PwStatus pw_graph_vertex_count(const struct PwGraph *g, uint64_t *out);

// Degree of a regular graph; for irregular explicit graphs the maximum.
//
// # Safety
// `g` must be a live handle and `out` writable.
enum PwStatus pw_graph_degree(const struct PwGraph *g, uint32_t *out);

// Writes the neighbors of `v` into `buf`. `written` always receives the
// neighbor count; `BufferTooSmall` is returned when `capacity` is short.
//
// # Safety
// `buf` must hold `capacity` elements (it may be null when `capacity` is 0).
enum PwStatus pw_graph_neighbors(const struct PwGraph *g,
                                 uint32_t v,
                                 uint32_t *buf,
                                 size_t capacity,
                                 size_t *written);

// One painting with the stream `(seed, stream)`.
//
// # Safety
// `g` must be a live handle and `out` writable.
enum PwStatus pw_run_painting(const struct PwGraph *g,
                              double laziness,
                              uint32_t mode,
                              uint64_t seed,
                              uint64_t stream,
                              struct PwOutcome *out);

// Runs `runs` paintings with streams `(seed, 0..runs)`; `workers = 0`
// uses one thread per core. The result does not depend on `workers`.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` writable.
enum PwStatus pw_simulate_batch(const char *spec,
                                uint64_t seed,
                                uint64_t runs,
                                double laziness,
                                uint32_t mode,
                                uint32_t workers,
                                struct PwBatchSummary *out);

// Mixing time, hitting table and `F` for the horizon `c t_mix`.
//
// # Safety
// `g` must be a live handle and `out` writable.
enum PwStatus pw_exact_summary(const struct PwGraph *g,
                               double laziness,
                               double c,
                               struct PwExactSummary *out);

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to fit) and returns its full length in bytes,
// excluding the terminator. Pass a null `buf` to query the length.
//
// # Safety
// `buf` must hold `capacity` bytes or be null.
size_t pw_last_error_message(char *buf, size_t capacity);

// Library version as a static NUL-terminated string.
const char *pw_version(void);

#endif  /* PAINTWALK_H */
