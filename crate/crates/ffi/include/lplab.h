#ifndef LPLAB_H
#define LPLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LabScheme {
  LAB_SCHEME_IMPLICIT_EULER = 0,
  LAB_SCHEME_CRANK_NICOLSON = 1,
} LabScheme;

typedef enum LabStatus {
  LAB_STATUS_OK = 0,
  LAB_STATUS_NULL_POINTER = 1,
  LAB_STATUS_INVALID_INPUT = 2,
  LAB_STATUS_SHAPE_MISMATCH = 3,
  LAB_STATUS_NON_ELLIPTIC = 4,
  LAB_STATUS_INFEASIBLE_RATIO = 5,
  LAB_STATUS_NUMERICAL_FAILURE = 6,
  LAB_STATUS_FORMAT = 7,
  LAB_STATUS_IO = 8,
  LAB_STATUS_PANIC = 99,
} LabStatus;

/**
 * Vector field handle.
 */
typedef struct LabField LabField;

/**
 * Assembled form handle.
 */
typedef struct LabForm LabForm;

/**
 * Uniform grid handle.
 */
typedef struct LabGrid LabGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`) and returns the length the full message
 * needs including the terminator. `buf` may be null to query the length.
 */
size_t lab_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lab_version(void);

/**
 * Grid with `d` axes of `nodes[k]` nodes; `lengths` may be null for the
 * unit box.
 */
enum LabStatus lab_grid_new(size_t d,
                            const size_t *nodes,
                            const double *lengths,
                            struct LabGrid **out_grid);

void lab_grid_free(struct LabGrid *grid);

/**
 * Number of grid nodes, or 0 for a null handle.
 */
size_t lab_grid_node_count(const struct LabGrid *grid);

/**
 * Field from `len = 2 * node_count * m` interleaved doubles.
 */
enum LabStatus lab_field_new(const struct LabGrid *grid,
                             size_t m,
                             const double *values,
                             size_t len,
                             struct LabField **out_field);

void lab_field_free(struct LabField *field);

/**
 * Number of doubles needed by [`lab_field_values`], or 0 for null.
 */
size_t lab_field_len(const struct LabField *field);

/**
 * Writes the interleaved values into `buf`, which must hold exactly
 * [`lab_field_len`] doubles.
 */
enum LabStatus lab_field_values(const struct LabField *field, double *buf, size_t len);

enum LabStatus lab_lp_norm(const struct LabField *field, double p, double *out_norm);

/**
 * Projection onto the unit L_p ball. `out_multiplier` (nullable) receives
 * the Lagrange multiplier, zero when the input is already in the ball.
 */
enum LabStatus lab_project(const struct LabField *field,
                           double p,
                           double tol,
                           struct LabField **out_field,
                           double *out_multiplier);

/**
 * Admissible exponent interval for the ratio `mu / M`. An unbounded
 * interval is reported as `(1, +inf)`.
 */
enum LabStatus lab_admissible_interval(double ratio, double *out_p_minus, double *out_p_plus);

/**
 * Assembles the form for a coefficient family given as JSON, e.g.
 * `{"family": "antisymmetric", "b": 1.0}`.
 */
enum LabStatus lab_form_from_family(const struct LabGrid *grid,
                                    size_t m,
                                    const char *family_json,
                                    uint64_t seed,
                                    struct LabForm **out_form);

void lab_form_free(struct LabForm *form);

enum LabStatus lab_form_constants(const struct LabForm *form, double *out_mu, double *out_big_m);

/**
 * `Re a(u, ||u||^{p-2} u) / ||u||_p^p`.
 */
enum LabStatus lab_dissipativity_gap(const struct LabForm *form,
                                     const struct LabField *field,
                                     double p,
                                     double *out_gap);

/**
 * Largest `||u(t)||_p / ||u_0||_p` over the trajectory up to `horizon`.
 */
enum LabStatus lab_evolve_worst_ratio(const struct LabForm *form,
                                      const struct LabField *field,
                                      double p,
                                      enum LabScheme scheme,
                                      double dt,
                                      double horizon,
                                      double *out_ratio);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LPLAB_H */
