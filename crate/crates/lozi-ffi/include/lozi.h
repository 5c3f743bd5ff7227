/* C ABI for the lozi toolkit. Regenerated by the crate build script; do not edit. */

#ifndef LOZI_H
#define LOZI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * The run completed and certified its claim, or finished its
 * numerical evidence.
 */
#define LOZI_OK 0

/**
 * The configuration was unusable: malformed JSON, bad parameters, or
 * an input the command refuses.
 */
#define LOZI_USAGE 1

/**
 * The run completed and certifiably refuted an asserted property.
 */
#define LOZI_REFUTED 2

/**
 * The run could not decide: an exactness guard reported an
 * indeterminate verdict.
 */
#define LOZI_INDETERMINATE 3

/**
 * A panic was caught at the boundary; no report was produced.
 */
#define LOZI_PANIC 4

/**
 * A required pointer argument was null.
 */
#define LOZI_NULL_ARGUMENT 5

/**
 * Opaque result of one run: a status code and a JSON report.
 */
typedef struct LoziReport LoziReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Run a command described by a `RunConfig` JSON document.
 *
 * When a report is produced (certified, refuted, or indeterminate
 * outcomes) it is stored in `out_report` and the return value equals
 * its status. Otherwise `out_report` is left null, the return value
 * names the failure class, and `lozi_last_error` describes it.
 *
 * # Safety
 *
 * `config_json` must be null or point to a NUL-terminated string, and
 * `out_report` must be null or point to writable memory for one
 * pointer. Null arguments are rejected with `LOZI_NULL_ARGUMENT`.
 */
int32_t lozi_run_json(const char *config_json, struct LoziReport **out_report);

/**
 * Status of a report handle: 0 certified, 2 refuted, 3 indeterminate.
 * Null handles report `LOZI_NULL_ARGUMENT`.
 *
 * # Safety
 *
 * `report` must be null or a live handle from `lozi_run_json`.
 */
int32_t lozi_report_status(const struct LoziReport *report);

/**
 * NUL-terminated report JSON, owned by the handle and valid until
 * `lozi_report_free`. Null for a null handle.
 *
 * # Safety
 *
 * `report` must be null or a live handle from `lozi_run_json`.
 */
const char *lozi_report_json(const struct LoziReport *report);

/**
 * Release a report handle. Null is a no-op.
 *
 * # Safety
 *
 * `report` must be null or a live handle from `lozi_run_json`; the
 * handle and its JSON pointer are invalid afterwards.
 */
void lozi_report_free(struct LoziReport *report);

/**
 * The most recent error message on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *lozi_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lozi_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* LOZI_H */
