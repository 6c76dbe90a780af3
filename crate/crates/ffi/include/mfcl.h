#ifndef MFCL_H
#define MFCL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MfclStatus {
  MFCL_STATUS_OK = 0,
  MFCL_STATUS_NULL_POINTER = 1,
  MFCL_STATUS_INVALID_UTF8 = 2,
  MFCL_STATUS_INVALID_ARGUMENT = 3,
  MFCL_STATUS_CONFIG = 4,
  MFCL_STATUS_NUMERICAL = 5,
  MFCL_STATUS_OUT_OF_RANGE = 6,
  MFCL_STATUS_IO = 7,
  MFCL_STATUS_PANIC = 8,
} MfclStatus;

typedef enum MfclTestFunction {
  MFCL_TEST_FUNCTION_GAUSS = 0,
  MFCL_TEST_FUNCTION_LORENTZ = 1,
  MFCL_TEST_FUNCTION_TANH = 2,
} MfclTestFunction;

/**
 * Opaque experiment configuration.
 */
typedef struct MfclConfig MfclConfig;

/**
 * Opaque space-time field on a uniform grid.
 */
typedef struct MfclField MfclField;

/**
 * Opaque zero-noise sweep report.
 */
typedef struct MfclReport MfclReport;

/**
 * One row of a sweep report.
 */
typedef struct MfclReportRow {
  double epsilon;
  enum MfclTestFunction theta;
  double p;
  double weak_star_error;
  double l1_mean_field;
  double mean_consistency;
  double oleinik_margin;
  double mass_defect;
  size_t n_mc;
} MfclReportRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library from this thread.
 */
const char *mfcl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mfcl_version(void);

/**
 * Desk-scale default configuration.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MfclStatus mfcl_config_desk(struct MfclConfig **out);

/**
 * Parses `key = value` lines on top of the desk-scale defaults.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` valid for writes.
 */
enum MfclStatus mfcl_config_parse(const char *text_ptr, struct MfclConfig **out);

/**
 * Sets one key as if it appeared in a config file.
 *
 * # Safety
 * `config` must come from this library; `key` and `value` must be
 * NUL-terminated strings.
 */
enum MfclStatus mfcl_config_set(struct MfclConfig *config, const char *key, const char *value);

/**
 * Configuration in `key = value` form; free with [`mfcl_string_free`].
 *
 * # Safety
 * `config` must come from this library and `out` be valid for writes.
 */
enum MfclStatus mfcl_config_to_text(const struct MfclConfig *config, char **out);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void mfcl_string_free(char *s);

/**
 * # Safety
 * `config` must come from this library or be null.
 */
void mfcl_config_free(struct MfclConfig *config);

/**
 * Solves the viscous mean-field equation for the configured data.
 *
 * # Safety
 * `config` must come from this library and `out` be valid for writes.
 */
enum MfclStatus mfcl_solve_viscous(const struct MfclConfig *config, struct MfclField **out);

/**
 * Exact entropy solution of the configured Riemann data at `times`.
 *
 * # Safety
 * `config` must come from this library, `times` must hold `n_times`
 * values and `out` be valid for writes.
 */
enum MfclStatus mfcl_exact_riemann(const struct MfclConfig *config,
                                   const double *times,
                                   size_t n_times,
                                   struct MfclField **out);

/**
 * Number of grid nodes and stored time slices.
 *
 * # Safety
 * `field` must come from this library; the outputs must be valid for
 * writes.
 */
enum MfclStatus mfcl_field_shape(const struct MfclField *field, size_t *n_x, size_t *n_t);

/**
 * Copies the grid nodes into `out`, which holds `len` values.
 *
 * # Safety
 * `field` must come from this library and `out` hold `len` writable
 * values.
 */
enum MfclStatus mfcl_field_nodes(const struct MfclField *field, double *out, size_t len);

/**
 * Copies the slice times into `out`, which holds `len` values.
 *
 * # Safety
 * As for [`mfcl_field_nodes`].
 */
enum MfclStatus mfcl_field_times(const struct MfclField *field, double *out, size_t len);

/**
 * Copies slice `j` into `out`, which holds `len` values.
 *
 * # Safety
 * As for [`mfcl_field_nodes`].
 */
enum MfclStatus mfcl_field_row(const struct MfclField *field, size_t j, double *out, size_t len);

/**
 * # Safety
 * `field` must come from this library or be null.
 */
void mfcl_field_free(struct MfclField *field);

/**
 * Zero-noise sweep over `n_eps` noise levels on `threads` workers
 * (0 uses every core). The report does not depend on `threads`.
 *
 * # Safety
 * `config` must come from this library, `epsilons` must hold `n_eps`
 * values and `out` be valid for writes.
 */
enum MfclStatus mfcl_sweep(const struct MfclConfig *config,
                           const double *epsilons,
                           size_t n_eps,
                           size_t threads,
                           struct MfclReport **out);

/**
 * # Safety
 * `report` must come from this library and `n` be valid for writes.
 */
enum MfclStatus mfcl_report_len(const struct MfclReport *report, size_t *n);

/**
 * # Safety
 * `report` must come from this library and `row` be valid for writes.
 */
enum MfclStatus mfcl_report_row(const struct MfclReport *report,
                                size_t i,
                                struct MfclReportRow *row);

/**
 * Writes the report as CSV to `path`.
 *
 * # Safety
 * `report` must come from this library and `path` be a NUL-terminated
 * string.
 */
enum MfclStatus mfcl_report_write_csv(const struct MfclReport *report, const char *path);

/**
 * # Safety
 * `report` must come from this library or be null.
 */
void mfcl_report_free(struct MfclReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MFCL_H */
