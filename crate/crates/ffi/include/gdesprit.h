#ifndef GDESPRIT_H
#define GDESPRIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum GdStatus {
  GD_STATUS_OK = 0,
  GD_STATUS_INVALID_ARGUMENT = 1,
  GD_STATUS_DIMENSION_MISMATCH = 2,
  GD_STATUS_NO_VALID_DECOMPOSITION = 3,
  GD_STATUS_DEGENERATE_FIBER = 4,
  GD_STATUS_COVERAGE = 5,
  GD_STATUS_CAPACITY_EXCEEDED = 6,
  GD_STATUS_MODEL_ORDER = 7,
  GD_STATUS_RANK_DEFICIENT = 8,
  GD_STATUS_MULTIPLICITY = 9,
  GD_STATUS_PAIRING_FAILURE = 10,
  GD_STATUS_NON_FINITE = 11,
  GD_STATUS_NUMERIC = 12,
  GD_STATUS_PARSE = 13,
  GD_STATUS_IO = 14,
  GD_STATUS_NULL_POINTER = 15,
  GD_STATUS_OUT_OF_RANGE = 16,
  GD_STATUS_PANIC = 17,
} GdStatus;

typedef struct GdIndexSet GdIndexSet;

typedef struct GdReport GdReport;

typedef struct GdSamples GdSamples;

// Estimation settings. `model_order == 0` selects the order automatically
// from `rel_tol`; `residual_tol <= 0` disables the pairing check.
typedef struct GdOptions {
  uintptr_t model_order;
  double rel_tol;
  uint64_t combo_seed;
  uintptr_t combo_retries;
  double residual_tol;
} GdOptions;

typedef struct GdComplex {
  double re;
  double im;
} GdComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *gd_last_error_message(void);

struct GdOptions gd_options_default(void);

// Parses a grid spec (`box:9,9`, `triangle:L`, `half_disc:R`,
// `mask:FILE`, or JSON).
//
// # Safety
// `spec` must be a NUL-terminated string and `out` a valid pointer.
enum GdStatus gd_index_set_parse(const char *spec, struct GdIndexSet **out);

// Builds a set from `n_points` points of `dim` coordinates each, stored
// point after point.
//
// # Safety
// `coords` must point to `dim * n_points` integers and `out` be valid.
enum GdStatus gd_index_set_from_points(uintptr_t dim,
                                       const int64_t *coords,
                                       uintptr_t n_points,
                                       struct GdIndexSet **out);

// # Safety
// `set` must be null or a handle from this library not yet freed.
void gd_index_set_free(struct GdIndexSet *set);

// Number of points; 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
uintptr_t gd_index_set_len(const struct GdIndexSet *set);

// # Safety
// `set` must be null or a live handle.
uintptr_t gd_index_set_dim(const struct GdIndexSet *set);

// Copies point `i` (canonical order) into `out`, which holds `dim` values.
//
// # Safety
// `set` must be a live handle and `out` point to `dim` writable integers.
enum GdStatus gd_index_set_point(const struct GdIndexSet *set, uintptr_t i, int64_t *out);

// Largest model order the row domain supports.
//
// # Safety
// `xi` must be a live handle and `out` valid.
enum GdStatus gd_capacity(const struct GdIndexSet *xi, uintptr_t *out);

// Largest column domain with `xi + upsilon` inside `omega`.
//
// # Safety
// `omega`, `xi` must be live handles and `out` valid.
enum GdStatus gd_erode(const struct GdIndexSet *omega,
                       const struct GdIndexSet *xi,
                       struct GdIndexSet **out);

// Samples on `domain`, one value per point in canonical order. The domain
// is copied.
//
// # Safety
// `domain` must be a live handle, `values` point to `n` values, `out` valid.
enum GdStatus gd_samples_new(const struct GdIndexSet *domain,
                             const struct GdComplex *values,
                             uintptr_t n,
                             struct GdSamples **out);

// # Safety
// `samples` must be null or a live handle.
void gd_samples_free(struct GdSamples *samples);

// 1D ESPRIT on `n` uniformly spaced samples; writes `k` frequencies `ζ`.
//
// # Safety
// `samples` must point to `n` values and `out_zeta` to `k` writable slots.
enum GdStatus gd_esprit_1d(const struct GdComplex *samples,
                           uintptr_t n,
                           uintptr_t k,
                           struct GdComplex *out_zeta);

// General-domain ESPRIT. `upsilon` may be null to use the erosion of the
// sample domain by `xi`; `options` may be null for the defaults (automatic
// order).
//
// # Safety
// Handles must be live, `options` null or valid, `out` valid.
enum GdStatus gd_esprit_nd(const struct GdSamples *samples,
                           const struct GdIndexSet *xi,
                           const struct GdIndexSet *upsilon,
                           const struct GdOptions *options,
                           struct GdReport **out);

// # Safety
// `report` must be null or a live handle.
void gd_report_free(struct GdReport *report);

// Estimated model order; 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
uintptr_t gd_report_order(const struct GdReport *report);

// # Safety
// `report` must be null or a live handle.
uintptr_t gd_report_dim(const struct GdReport *report);

// Writes `ζ_k` (dim values) and `c_k` of term `k`.
//
// # Safety
// `report` must be live, `zeta` point to `dim` slots and `coeff` be valid.
enum GdStatus gd_report_term(const struct GdReport *report,
                             uintptr_t k,
                             struct GdComplex *zeta,
                             struct GdComplex *coeff);

// Copies up to `cap` singular values into `out` and returns how many the
// report holds.
//
// # Safety
// `report` must be null or live; `out` must hold `cap` values.
uintptr_t gd_report_singular_values(const struct GdReport *report, double *out, uintptr_t cap);

// Largest relative off-diagonal residual of the joint diagonalization.
//
// # Safety
// `report` must be null or a live handle.
double gd_report_max_pairing_residual(const struct GdReport *report);

// The full report as JSON; release with [`gd_string_free`]. Null on
// failure.
//
// # Safety
// `report` must be null or a live handle.
char *gd_report_to_json(const struct GdReport *report);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void gd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GDESPRIT_H */
