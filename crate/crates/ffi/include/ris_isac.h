#ifndef RIS_ISAC_H
#define RIS_ISAC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define RIS_ISAC_PRESET_TABLE1 0

#define RIS_ISAC_PRESET_DESK 1

#define RIS_ISAC_SCHEME_PROPOSED 0

#define RIS_ISAC_SCHEME_NO_RIS 1

#define RIS_ISAC_SCHEME_RANDOM_PHASE 2

// Result code of every exported function.
typedef enum {
  RIS_ISAC_STATUS_OK = 0,
  RIS_ISAC_STATUS_NULL_POINTER = 1,
  RIS_ISAC_STATUS_INVALID_ARGUMENT = 2,
  // The thresholds cannot be met; a report is still produced.
  RIS_ISAC_STATUS_INFEASIBLE = 3,
  // A solver failed numerically; a report with the last consistent iterate
  // may still be produced.
  RIS_ISAC_STATUS_NUMERICAL = 4,
  RIS_ISAC_STATUS_PANIC = 5,
  // The caller's buffer is smaller than the value written to `needed`.
  RIS_ISAC_STATUS_BUFFER_TOO_SMALL = 6,
} RisIsacStatus;

// Opaque run report handle.
typedef struct RisIsacReport RisIsacReport;

// Opaque scenario handle.
typedef struct RisIsacScenario RisIsacScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ris_isac_version(void);

// Message for the most recent failure on this thread, or an empty string.
// The pointer stays valid until the next call into the library on this
// thread.
const char *ris_isac_last_error_message(void);

// Builds a named preset scenario with the given base RNG seed.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
RisIsacStatus ris_isac_scenario_from_preset(uint32_t preset_code,
                                            uint64_t rng_seed,
                                            RisIsacScenario **out);

// Parses a scenario document (UTF-8 JSON).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
RisIsacStatus ris_isac_scenario_from_json(const char *json, RisIsacScenario **out);

// Replaces the rate (bps/Hz) and sensing SNR (dB) thresholds. The scenario
// is left unchanged when the new values are invalid.
//
// # Safety
// `scenario` must be a live handle or null.
RisIsacStatus ris_isac_scenario_set_thresholds(RisIsacScenario *scenario,
                                               double r_req_bps_hz,
                                               double gamma_req_db);

// # Safety
// `scenario` must come from this library and not be used afterwards.
void ris_isac_scenario_free(RisIsacScenario *scenario);

// Runs one scheme with default iteration settings. See [`ris_isac_run_with`].
//
// # Safety
// Same as [`ris_isac_run_with`].
RisIsacStatus ris_isac_run(const RisIsacScenario *scenario,
                           uint32_t scheme,
                           uint64_t seed,
                           RisIsacReport **out_report);

// Runs one scheme on the channel realization for `seed`.
//
// On `OK`, `INFEASIBLE` and `NUMERICAL` with a recoverable iterate,
// `*out_report` receives a report handle; otherwise it is set to null.
//
// # Safety
// `scenario` must be a live handle; `out_report` must be writable.
RisIsacStatus ris_isac_run_with(const RisIsacScenario *scenario,
                                uint32_t scheme,
                                uint64_t seed,
                                double epsilon,
                                uint32_t max_iter,
                                RisIsacReport **out_report);

// # Safety
// `report` must come from this library and not be used afterwards.
void ris_isac_report_free(RisIsacReport *report);

// Final total transmit power in watts; NaN for infeasible runs or a null
// handle.
//
// # Safety
// `report` must be a live handle or null.
double ris_isac_report_final_power(const RisIsacReport *report);

// Number of beamforming solves performed; 0 for a null handle.
//
// # Safety
// `report` must be a live handle or null.
uint32_t ris_isac_report_iterations(const RisIsacReport *report);

// Stop reason as a static string such as `"converged"`; null for a null
// handle.
//
// # Safety
// `report` must be a live handle or null.
const char *ris_isac_report_stop_reason(const RisIsacReport *report);

// Worst rate margin (relative) and worst sensing SNR margin (dB) of the
// final iterate.
//
// # Safety
// `report` must be a live handle; the out pointers must be writable.
RisIsacStatus ris_isac_report_margins(const RisIsacReport *report,
                                      double *min_se_margin,
                                      double *min_snr_margin_db);

// Copies the per-iteration power history (W). `*needed` receives the
// length; pass `cap = 0` to query it.
//
// # Safety
// `buf` must hold `cap` doubles; `needed` may be null.
RisIsacStatus ris_isac_report_power_history(const RisIsacReport *report,
                                            double *buf,
                                            size_t cap,
                                            size_t *needed);

// Copies the final RIS phases in radians, in `[0, 2π)`. The no-RIS scheme
// reports all zeros. Buffer semantics as in [`ris_isac_report_power_history`].
//
// # Safety
// `buf` must hold `cap` doubles; `needed` may be null.
RisIsacStatus ris_isac_report_phases(const RisIsacReport *report,
                                     double *buf,
                                     size_t cap,
                                     size_t *needed);

// Writes the full report as a NUL-terminated JSON document. `*needed`
// receives the size including the terminator.
//
// # Safety
// `buf` must hold `cap` bytes; `needed` may be null.
RisIsacStatus ris_isac_report_json(const RisIsacReport *report,
                                   char *buf,
                                   size_t cap,
                                   size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIS_ISAC_H */
