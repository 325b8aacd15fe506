#ifndef SOJOURN_H
#define SOJOURN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; 2 to 4 match the command-line exit codes.
 */
typedef enum SojournStatus {
  SOJOURN_STATUS_OK = 0,
  SOJOURN_STATUS_INVALID_PARAMETER = 2,
  SOJOURN_STATUS_QUADRATURE = 3,
  SOJOURN_STATUS_SIMULATOR = 4,
  SOJOURN_STATUS_NULL_POINTER = 10,
  /**
   * The output buffer is shorter than the result.
   */
  SOJOURN_STATUS_BUFFER_TOO_SMALL = 11,
  /**
   * No data for this request, such as a curve for a tier with too few samples.
   */
  SOJOURN_STATUS_NO_DATA = 12,
  SOJOURN_STATUS_PANIC = 13,
} SojournStatus;

/**
 * Simulated curves selectable with `sojourn_simulation_curve`.
 */
typedef enum SojournCurve {
  /**
   * CCDF of the sojourn in the starting cell.
   */
  SOJOURN_CURVE_INITIAL = 0,
  /**
   * CCDF of complete sojourns.
   */
  SOJOURN_CURVE_SOJOURN = 1,
  /**
   * Probability of being served by the initial station at time T.
   */
  SOJOURN_CURVE_STAY = 2,
} SojournCurve;

/**
 * Opaque network handle.
 */
typedef struct SojournNetwork SojournNetwork;

/**
 * Opaque simulation result handle.
 */
typedef struct SojournSimulation SojournSimulation;

typedef struct SojournTier {
  double intensity;
  double power;
  double bias;
} SojournTier;

typedef struct SojournMobility {
  double velocity;
  /**
   * Time-to-trigger; 0 disables it.
   */
  double ttt;
  /**
   * Ping-pong window, at least `ttt`.
   */
  double t_p;
} SojournMobility;

typedef struct SojournTierMetrics {
  double association_prob;
  double mean_sojourn;
  double handoff_rate;
  double effective_handoff_rate;
  double ping_pong_rate;
  double time_fraction;
} SojournTierMetrics;

typedef struct SojournEstimate {
  double value;
  double stderr;
} SojournEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL, or 0
 * when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sojourn_last_error(char *buf, size_t len);

/**
 * Builds a network from `n` tiers and path-loss exponent `alpha` (> 2).
 *
 * # Safety
 * `tiers` must point to `n` tiers and `out` must be writable.
 */
enum SojournStatus sojourn_network_new(const struct SojournTier *tiers,
                                       size_t n,
                                       double alpha,
                                       struct SojournNetwork **out_network);

/**
 * Releases a network; null is ignored.
 *
 * # Safety
 * `network` must come from `sojourn_network_new` and not be used afterwards.
 */
void sojourn_network_free(struct SojournNetwork *network);

/**
 * Number of tiers, or 0 for a null handle.
 *
 * # Safety
 * `network` must be null or a live handle.
 */
size_t sojourn_network_tier_count(const struct SojournNetwork *network);

/**
 * Probability that a typical user is served by `tier`.
 *
 * # Safety
 * `network` must be a live handle and `out` writable.
 */
enum SojournStatus sojourn_association_prob(const struct SojournNetwork *network,
                                            size_t tier,
                                            double *out_value);

/**
 * Handoffs out of `tier` cells per unit time.
 *
 * # Safety
 * Pointers must be valid as for `sojourn_association_prob`.
 */
enum SojournStatus sojourn_handoff_rate(const struct SojournNetwork *network,
                                        const struct SojournMobility *mobility_params,
                                        size_t tier,
                                        double *out_value);

/**
 * Handoffs per unit time over all tiers.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SojournStatus sojourn_total_handoff_rate(const struct SojournNetwork *network,
                                              const struct SojournMobility *mobility_params,
                                              double *out_value);

/**
 * Mean sojourn in a `tier` cell.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SojournStatus sojourn_mean_sojourn(const struct SojournNetwork *network,
                                        const struct SojournMobility *mobility_params,
                                        size_t tier,
                                        double *out_value);

/**
 * Per-tier metrics into `out[0..tier_count]`.
 *
 * # Safety
 * `out_metrics` must point to `capacity` writable entries.
 */
enum SojournStatus sojourn_metrics(const struct SojournNetwork *network,
                                   const struct SojournMobility *mobility_params,
                                   struct SojournTierMetrics *out_metrics,
                                   size_t capacity);

/**
 * CCDF of the sojourn in the starting `tier` cell at each of `n` times.
 *
 * # Safety
 * `times` and `out_values` must each hold `n` doubles.
 */
enum SojournStatus sojourn_ccdf_initial(const struct SojournNetwork *network,
                                        const struct SojournMobility *mobility_params,
                                        size_t tier,
                                        const double *times,
                                        size_t n,
                                        double *out_values);

/**
 * CCDF of a complete sojourn in a `tier` cell at each of `n` times.
 *
 * # Safety
 * `times` and `out_values` must each hold `n` doubles.
 */
enum SojournStatus sojourn_ccdf_sojourn(const struct SojournNetwork *network,
                                        const struct SojournMobility *mobility_params,
                                        size_t tier,
                                        const double *times,
                                        size_t n,
                                        double *out_values);

/**
 * Area swept by the forbidden disc of a walk of length `z` starting at
 * distance `r0` and angle `theta` from the serving station.
 *
 * # Safety
 * `out_value` must be writable.
 */
enum SojournStatus sojourn_swept_area(double r0,
                                      double theta,
                                      double z,
                                      double beta,
                                      double *out_value);

/**
 * Runs the simulator on the `n` grid times. A `horizon` of 0 selects the
 * default of 50 mean sojourns.
 *
 * # Safety
 * `grid` must hold `n` doubles and `out_simulation` be writable.
 */
enum SojournStatus sojourn_simulate(const struct SojournNetwork *network,
                                    const struct SojournMobility *mobility_params,
                                    uint64_t seed,
                                    size_t replications,
                                    double horizon,
                                    const double *grid,
                                    size_t n,
                                    struct SojournSimulation **out_simulation);

/**
 * Releases a simulation result; null is ignored.
 *
 * # Safety
 * `simulation` must come from `sojourn_simulate` and not be used afterwards.
 */
void sojourn_simulation_free(struct SojournSimulation *simulation);

/**
 * Empirical handoff rate of `tier`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SojournStatus sojourn_simulation_handoff_rate(const struct SojournSimulation *simulation,
                                                   size_t tier,
                                                   struct SojournEstimate *out_estimate);

/**
 * Empirical mean complete sojourn of `tier`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SojournStatus sojourn_simulation_mean_sojourn(const struct SojournSimulation *simulation,
                                                   size_t tier,
                                                   struct SojournEstimate *out_estimate);

/**
 * Copies an empirical curve on the simulation grid into `values` and
 * `stderrs` (either may be null). `capacity` must be at least the grid length.
 *
 * # Safety
 * Non-null buffers must hold `capacity` doubles.
 */
enum SojournStatus sojourn_simulation_curve(const struct SojournSimulation *simulation,
                                            enum SojournCurve curve,
                                            size_t tier,
                                            double *values,
                                            double *stderrs,
                                            size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOJOURN_H */
