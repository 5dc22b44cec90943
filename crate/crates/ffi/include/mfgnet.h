#ifndef MFGNET_H
#define MFGNET_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MfgnetStatus {
  MFGNET_STATUS_OK = 0,
  MFGNET_STATUS_NULL_POINTER = 1,
  /**
   * Bad argument at the C boundary (length, encoding, index).
   */
  MFGNET_STATUS_INVALID_ARGUMENT = 2,
  MFGNET_STATUS_NOT_A_SIMPLEX = 3,
  MFGNET_STATUS_STEP_TOO_LARGE = 4,
  /**
   * The handle still holds the last iterate.
   */
  MFGNET_STATUS_NO_CONVERGENCE = 5,
  MFGNET_STATUS_DEGENERATE = 6,
  MFGNET_STATUS_NO_REAL_EQUILIBRIUM = 7,
  MFGNET_STATUS_NOT_AN_EQUILIBRIUM = 8,
  MFGNET_STATUS_NO_ROOT = 9,
  MFGNET_STATUS_DEGENERATE_MAPPING = 10,
  MFGNET_STATUS_HYPOTHESIS_VIOLATED = 11,
  MFGNET_STATUS_OUT_OF_RANGE = 12,
  MFGNET_STATUS_INVALID_GRAPH = 13,
  MFGNET_STATUS_INVALID_PARAMETER = 14,
  MFGNET_STATUS_IO = 15,
  MFGNET_STATUS_JSON = 16,
  MFGNET_STATUS_PANIC = 99,
} MfgnetStatus;

/**
 * Classification of a stationary point of the reduced value dynamics.
 */
typedef enum MfgnetStability {
  MFGNET_STABILITY_STABLE_NODE = 0,
  MFGNET_STABILITY_UNSTABLE_NODE = 1,
  MFGNET_STABILITY_SADDLE = 2,
  MFGNET_STABILITY_CENTER_OR_DEGENERATE = 3,
} MfgnetStability;

/**
 * Interaction graph.
 */
typedef struct MfgnetGraph MfgnetGraph;

/**
 * Solved initial-terminal value problem.
 */
typedef struct MfgnetItvp MfgnetItvp;

/**
 * Cost weights.
 */
typedef struct MfgnetWeights MfgnetWeights;

/**
 * Stationary mean-field equilibrium.
 */
typedef struct MfgnetStationary {
  double x_hat[3];
  double y_star[2];
  double kappa;
  double residual;
  enum MfgnetStability stability;
} MfgnetStationary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t mfgnet_last_error(char *buf, size_t len);

/**
 * Library version, a static NUL-terminated string.
 */
const char *mfgnet_version(void);

/**
 * Unit costs on the four arcs, large costs on 1↔2, congestion `(1, 1, 2)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MfgnetStatus mfgnet_weights_default(struct MfgnetWeights **out_weights);

/**
 * Cost `r` on every control arc, `gamma` on every disturbance arc and linear
 * congestion `q[i] * x_i`.
 *
 * # Safety
 * `q` must point to 3 doubles, `out_weights` must be valid.
 */
enum MfgnetStatus mfgnet_weights_uniform(double r,
                                         double gamma,
                                         const double *q,
                                         struct MfgnetWeights **out_weights);

/**
 * Full matrices, row-major 3×3 each.
 *
 * # Safety
 * `control` and `disturbance` must point to 9 doubles, `q` to 3.
 */
enum MfgnetStatus mfgnet_weights_new(const double *control,
                                     const double *disturbance,
                                     const double *q,
                                     struct MfgnetWeights **out_weights);

/**
 * # Safety
 * `w` must come from an `mfgnet_weights_*` constructor, or be null.
 */
void mfgnet_weights_free(struct MfgnetWeights *w);

/**
 * Solves the initial-terminal value problem on `[0, horizon]` from `x0`
 * (3 doubles) with congestion terminal values.
 *
 * On `MFGNET_STATUS_NO_CONVERGENCE` `*out_solution` still receives the last
 * iterate and must be freed.
 *
 * # Safety
 * Pointers must be valid; `x0` must point to 3 doubles.
 */
enum MfgnetStatus mfgnet_itvp_solve(const struct MfgnetWeights *weights,
                                    const double *x0,
                                    double horizon,
                                    double dt,
                                    double relaxation,
                                    double tolerance,
                                    size_t max_iterations,
                                    struct MfgnetItvp **out_solution);

/**
 * Number of time points on the solution grid.
 *
 * # Safety
 * `sol` must be a live handle.
 */
enum MfgnetStatus mfgnet_itvp_len(const struct MfgnetItvp *sol, size_t *out_len);

/**
 * Sweeps used and the final residual `sup |forward(v(x)) - x|`.
 *
 * # Safety
 * `sol` must be a live handle; outputs must be valid.
 */
enum MfgnetStatus mfgnet_itvp_summary(const struct MfgnetItvp *sol,
                                      size_t *out_iterations,
                                      double *out_residual);

/**
 * Time, distribution and values at grid index `k`; `x` and `v` receive 3
 * doubles each.
 *
 * # Safety
 * `sol` must be a live handle; outputs must be valid.
 */
enum MfgnetStatus mfgnet_itvp_point(const struct MfgnetItvp *sol,
                                    size_t k,
                                    double *out_t,
                                    double *out_x,
                                    double *out_v);

/**
 * # Safety
 * `sol` must come from [`mfgnet_itvp_solve`], or be null.
 */
void mfgnet_itvp_free(struct MfgnetItvp *sol);

/**
 * Third-quadrant stationary point of `ẏ = -½ a y² + c` and its class;
 * `a = (a11, a12, a21, a22)`, `c = (c1, c2)`, `out_y` receives 2 doubles.
 *
 * # Safety
 * `a` must point to 4 doubles, `c` to 2, `out_y` to 2 writable doubles.
 */
enum MfgnetStatus mfgnet_stationary_point(const double *a,
                                          const double *c,
                                          double *out_y,
                                          enum MfgnetStability *out_stability);

/**
 * Stationary equilibrium for the given weights.
 *
 * # Safety
 * `weights` must be a live handle, `out_stationary` valid.
 */
enum MfgnetStatus mfgnet_stationary_equilibrium(const struct MfgnetWeights *weights,
                                                struct MfgnetStationary *out_stationary);

/**
 * The bundled 11-bus network.
 *
 * # Safety
 * `out_graph` must be valid.
 */
enum MfgnetStatus mfgnet_graph_walpole(struct MfgnetGraph **out_graph);

/**
 * Undirected graph on nodes `1..=n` from `count` edges `(from[k], to[k], weight[k])`.
 *
 * # Safety
 * The three arrays must hold `count` entries each.
 */
enum MfgnetStatus mfgnet_graph_from_edges(size_t n,
                                          const uint32_t *from,
                                          const uint32_t *to,
                                          const double *weight,
                                          size_t count,
                                          struct MfgnetGraph **out_graph);

/**
 * Parses the `i j w` edge-list text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string.
 */
enum MfgnetStatus mfgnet_graph_parse(const char *text, struct MfgnetGraph **out_graph);

/**
 * # Safety
 * `g` must be a live handle.
 */
enum MfgnetStatus mfgnet_graph_node_count(const struct MfgnetGraph *g, size_t *out_n);

/**
 * # Safety
 * `g` must come from an `mfgnet_graph_*` constructor, or be null.
 */
void mfgnet_graph_free(struct MfgnetGraph *g);

/**
 * Per-node margins of the infection-free stability condition at `s_star`
 * (`n` entries); `out_stable` is 1 when every margin is positive.
 * `rates = (β13, β23, β31, β32)`.
 *
 * # Safety
 * `s_star` and `out_margins` must hold `n` doubles, `rates` 4.
 */
enum MfgnetStatus mfgnet_epidemic_stability(const struct MfgnetGraph *g,
                                            const double *rates,
                                            const double *s_star,
                                            size_t n,
                                            double *out_margins,
                                            int32_t *out_stable);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MFGNET_H */
