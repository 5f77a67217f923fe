#ifndef SUPEROPT_H
#define SUPEROPT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by the solver entry points.
 */
typedef enum SuperoptStatus {
  SuperoptStatus_Ok = 0,
  SuperoptStatus_InvalidArgument = 1,
  SuperoptStatus_ParseError = 2,
  SuperoptStatus_HypothesisFailed = 3,
  SuperoptStatus_NumericalFailure = 4,
} SuperoptStatus;

typedef struct SuperoptReport SuperoptReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string, e.g. "0.1.0".
 */
const char *superopt_version(void);

/**
 * Solve a symbol given as input JSON and return a report handle.
 *
 * `input_json` is the same document the CLI accepts. `seed` fixes the
 * search; `grid_size` of 0 selects the grid automatically. The returned
 * handle is non-null even on failure (query it for the status and error
 * message) and null only if `input_json` is null or not UTF-8.
 */
struct SuperoptReport *superopt_solve_json(const char *input_json,
                                           uint64_t seed,
                                           uintptr_t grid_size);

/**
 * Status of a report handle. Null handles report InvalidArgument.
 */
enum SuperoptStatus superopt_report_status(const struct SuperoptReport *report);

/**
 * Report JSON, or an empty string when the solve failed. Borrowed from the
 * handle; do not free.
 */
const char *superopt_report_json(const struct SuperoptReport *report);

/**
 * Error message for a failed solve, empty on success. Borrowed from the
 * handle; do not free.
 */
const char *superopt_last_error(const struct SuperoptReport *report);

/**
 * Release a report handle. Null is a no-op.
 */
void superopt_report_free(struct SuperoptReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUPEROPT_H */
