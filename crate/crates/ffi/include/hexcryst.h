#ifndef HEXCRYST_H
#define HEXCRYST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Zero is success.
 */
typedef enum HcStatus {
  HC_STATUS_OK = 0,
  HC_STATUS_NULL_POINTER = 1,
  HC_STATUS_INVALID_ARGUMENT = 2,
  HC_STATUS_INVALID_DOMAIN = 3,
  HC_STATUS_INVALID_MEASURE = 4,
  HC_STATUS_NON_CONVERGENCE = 5,
  HC_STATUS_CELL_TOO_LARGE = 6,
  HC_STATUS_EMPTY_CELL = 7,
  HC_STATUS_BUFFER_TOO_SMALL = 8,
  HC_STATUS_INTERNAL = 9,
} HcStatus;

/**
 * Scaled domain handle.
 */
typedef struct HcDomain HcDomain;

/**
 * Atomic measure handle.
 */
typedef struct HcMeasure HcMeasure;

/**
 * Minimizer output handle.
 */
typedef struct HcResult HcResult;

/**
 * Energy decomposition.
 */
typedef struct HcEnergy {
  double surface;
  double transport;
  double total;
  double v_lambda;
  double defect;
} HcEnergy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. Valid until
 * the next call into this library on the same thread.
 */
const char *hc_last_error(void);

/**
 * Domain from a shape name such as `square`, `regular-hexagon`,
 * `regular-7-gon`, `disk-approx(64)` or `torus(1.0)`, scaled by `lambda`.
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` a valid pointer.
 */
enum HcStatus hc_domain_named(const char *name, double lambda, struct HcDomain **out);

/**
 * Domain from `n_vertices` counter-clockwise vertices `xy = [x0, y0, x1, …]`,
 * rescaled to unit area about the centroid, then scaled by `lambda`.
 *
 * # Safety
 * `xy` must hold `2 * n_vertices` doubles and `out` must be valid.
 */
enum HcStatus hc_domain_polygon(const double *xy,
                                size_t n_vertices,
                                double lambda,
                                struct HcDomain **out);

/**
 * Torus with periods `cols·a × rows·a√3` that holds the triangular lattice.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HcStatus hc_domain_commensurate_torus(size_t cols, size_t rows, struct HcDomain **out);

/**
 * `V_λ`, the area of the scaled domain; NaN for a null handle.
 *
 * # Safety
 * `d` must be null or a live handle.
 */
double hc_domain_v_lambda(const struct HcDomain *d);

/**
 * # Safety
 * `d` must be null or a handle not yet freed.
 */
void hc_domain_free(struct HcDomain *d);

/**
 * Measure with `n` points. `masses` may be null for equal masses; otherwise
 * they are rescaled to total `V_λ`.
 *
 * # Safety
 * `xy` must hold `2n` doubles, `masses` null or `n` doubles.
 */
enum HcStatus hc_measure_new(const struct HcDomain *domain,
                             const double *xy,
                             const double *masses,
                             size_t n,
                             struct HcMeasure **out);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void hc_measure_free(struct HcMeasure *m);

/**
 * Evaluates the energy by solving the transport problem to `tol_mass`.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum HcStatus hc_energy(const struct HcDomain *domain,
                        const struct HcMeasure *measure,
                        double tol_mass,
                        struct HcEnergy *out);

/**
 * Minimizes with `n` points from a seeded low-discrepancy start. A run that
 * stops at `max_iters` still succeeds; see [`hc_result_converged`].
 *
 * # Safety
 * `domain` must be live and `out` valid.
 */
enum HcStatus hc_minimize(const struct HcDomain *domain,
                          size_t n,
                          uint64_t seed,
                          size_t max_iters,
                          struct HcResult **out);

/**
 * Number of points in a result; 0 for null.
 *
 * # Safety
 * `r` must be null or live.
 */
size_t hc_result_len(const struct HcResult *r);

/**
 * 1 if the minimizer met its tolerances, 0 if not, -1 for null.
 *
 * # Safety
 * `r` must be null or live.
 */
int32_t hc_result_converged(const struct HcResult *r);

/**
 * Copies `2·len` coordinates into `xy`, which has room for `cap` doubles.
 *
 * # Safety
 * `r` must be live and `xy` writable for `cap` doubles.
 */
enum HcStatus hc_result_points(const struct HcResult *r, double *xy, size_t cap);

/**
 * Copies the `len` masses into `masses`, which has room for `cap` doubles.
 *
 * # Safety
 * `r` must be live and `masses` writable for `cap` doubles.
 */
enum HcStatus hc_result_masses(const struct HcResult *r, double *masses, size_t cap);

/**
 * # Safety
 * `r` must be live and `out` valid.
 */
enum HcStatus hc_result_energy(const struct HcResult *r, struct HcEnergy *out);

/**
 * # Safety
 * `r` must be null or a handle not yet freed.
 */
void hc_result_free(struct HcResult *r);

/**
 * Runs every certificate check; `*all_passed` is set to 1 or 0.
 *
 * # Safety
 * `all_passed` must be valid.
 */
enum HcStatus hc_certify(int32_t *all_passed);

/**
 * `c_6 = 5√3/54`.
 */
double hc_c6(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEXCRYST_H */
