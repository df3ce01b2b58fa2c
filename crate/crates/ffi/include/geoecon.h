#ifndef GEOECON_H
#define GEOECON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define GEOECON_OK 0

/**
 * A required pointer argument was null.
 */
#define GEOECON_ERR_NULL_POINTER 1

/**
 * Arguments were inconsistent (bad dimensions, non-binary cell, bad label).
 */
#define GEOECON_ERR_INVALID_ARGUMENT 2

/**
 * The indices could not be computed (degenerate spectrum, too little data).
 */
#define GEOECON_ERR_COMPUTATION 3

/**
 * The requested entry exists but has no value (e.g. a country with no
 * specialization has no GCI).
 */
#define GEOECON_ERR_NO_VALUE 4

/**
 * Index out of range.
 */
#define GEOECON_ERR_OUT_OF_RANGE 5

/**
 * A Rust panic was caught at the boundary.
 */
#define GEOECON_ERR_PANIC 6

/**
 * Binary country × domain specialization matrix.
 */
typedef struct GeoeconMatrix GeoeconMatrix;

/**
 * Diversity, ubiquity, ETGCI, GCI and ranks computed from a matrix.
 */
typedef struct GeoeconReport GeoeconReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *geoecon_last_error(void);

/**
 * Creates a matrix from `n_countries * n_domains` row-major cells (each 0
 * or 1). `countries` and `domains` may be null, in which case labels
 * `c0, c1, …` and `d0, d1, …` are used.
 *
 * # Safety
 * `cells` must point to `n_countries * n_domains` bytes; non-null label
 * arrays must hold that many NUL-terminated UTF-8 strings; `out` must be
 * writable.
 */
int32_t geoecon_matrix_new(const uint8_t *cells,
                           size_t n_countries,
                           size_t n_domains,
                           const char *const *countries,
                           const char *const *domains,
                           GeoeconMatrix **out);

/**
 * # Safety
 * `matrix` must be null or a handle from [`geoecon_matrix_new`] not yet freed.
 */
void geoecon_matrix_free(GeoeconMatrix *matrix);

/**
 * Computes all indices for `matrix`.
 *
 * # Safety
 * `matrix` must be a live handle and `out` writable.
 */
int32_t geoecon_report_compute(const GeoeconMatrix *matrix, GeoeconReport **out);

/**
 * # Safety
 * `report` must be null or a handle from [`geoecon_report_compute`] not yet freed.
 */
void geoecon_report_free(GeoeconReport *report);

/**
 * Number of countries in the report, 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t geoecon_report_country_count(const GeoeconReport *report);

/**
 * Number of domains in the report, 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t geoecon_report_domain_count(const GeoeconReport *report);

/**
 * GCI of country `index`; `GEOECON_ERR_NO_VALUE` for a country with no
 * specialization.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
int32_t geoecon_report_gci(const GeoeconReport *report, size_t index, double *out);

/**
 * 1-based rank of country `index` by GCI.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
int32_t geoecon_report_country_rank(const GeoeconReport *report, size_t index, size_t *out);

/**
 * Number of domains country `index` is specialized in.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
int32_t geoecon_report_diversity(const GeoeconReport *report, size_t index, size_t *out);

/**
 * ETGCI of domain `index` in [0, 1]; `GEOECON_ERR_NO_VALUE` for a domain no
 * country is specialized in.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
int32_t geoecon_report_etgci(const GeoeconReport *report, size_t index, double *out);

/**
 * Number of countries specialized in domain `index`.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
int32_t geoecon_report_ubiquity(const GeoeconReport *report, size_t index, size_t *out);

/**
 * The report as an `indices.json` document. Free with [`geoecon_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
int32_t geoecon_indices_json(const GeoeconReport *report, char **out);

/**
 * Best single additions per country as an `ssset.csv` document. Free with
 * [`geoecon_string_free`].
 *
 * # Safety
 * `matrix` must be a live handle and `out` writable.
 */
int32_t geoecon_ssset_csv(const GeoeconMatrix *matrix, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void geoecon_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEOECON_H */
