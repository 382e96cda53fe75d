#ifndef L4S_SIM_H
#define L4S_SIM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum L4sStatus {
  L4S_STATUS_OK = 0,
  L4S_STATUS_NULL_POINTER = 1,
  // A string was not UTF-8 or named no known queue or flow.
  L4S_STATUS_INVALID_ARGUMENT = 2,
  // The scenario as a whole fails validation.
  L4S_STATUS_INVALID_SCENARIO = 3,
  L4S_STATUS_SIMULATION_FAILED = 4,
  L4S_STATUS_OUT_OF_RANGE = 5,
  // The output buffer is too small; the required size was reported.
  L4S_STATUS_BUFFER_TOO_SMALL = 6,
  L4S_STATUS_PANIC = 7,
} L4sStatus;

// How the Prague fallback detector is driven.
typedef enum L4sFallbackForce {
  // Let the detector decide from RTT measurements.
  L4S_FALLBACK_FORCE_AUTO = 0,
  L4S_FALLBACK_FORCE_L4S = 1,
  L4S_FALLBACK_FORCE_CLASSIC = 2,
} L4sFallbackForce;

// Opaque scenario handle.
typedef struct L4sScenario L4sScenario;

// Opaque handle to the outcome of one trial.
typedef struct L4sTrial L4sTrial;

// Per-flow summary of a trial.
typedef struct L4sFlowMetrics {
  // Goodput, Mb/s.
  double throughput_mbps;
  double mean_rtt_ms;
  double mean_qdelay_ms;
  double p99_qdelay_ms;
  uint64_t marks;
  uint64_t drops;
  // Fraction of the combined goodput.
  double share;
} L4sFlowMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a two-flow (or one-flow) scenario with default network settings:
// 100 Mb/s bottleneck, 10 ms base RTT, 60 s duration.
//
// `queue` is one of `fifo`, `fifo-ecn`, `codel`, `fq`, `fq-codel`, `dualpi2`.
// Flows are labels such as `prague`, `prague+fb`, `cubic-ecn`,
// `bbr2-accecn`; `flow_b` may be null for a single flow.
//
// # Safety
// String arguments must be null or valid NUL-terminated strings; `out` must
// be null or writable.
enum L4sStatus l4s_scenario_new(const char *queue,
                                double buffer_bdp,
                                const char *flow_a,
                                const char *flow_b,
                                struct L4sScenario **out);

// # Safety
// `s` must be null or a handle from [`l4s_scenario_new`] not yet freed.
void l4s_scenario_free(struct L4sScenario *s);

// # Safety
// `s` must be null or a live scenario handle.
enum L4sStatus l4s_scenario_set_duration_ms(struct L4sScenario *s, uint64_t ms);

// # Safety
// `s` must be null or a live scenario handle.
enum L4sStatus l4s_scenario_set_base_rtt_us(struct L4sScenario *s, uint64_t us);

// # Safety
// `s` must be null or a live scenario handle.
enum L4sStatus l4s_scenario_set_bottleneck_bps(struct L4sScenario *s, uint64_t bps);

// Step-marking threshold of the FIFO and FQ ECN queues.
//
// # Safety
// `s` must be null or a live scenario handle.
enum L4sStatus l4s_scenario_set_ecn_threshold_us(struct L4sScenario *s, uint64_t us);

// # Safety
// `s` must be null or a live scenario handle.
enum L4sStatus l4s_scenario_set_fallback_force(struct L4sScenario *s, enum L4sFallbackForce force);

// Writes the scenario's id string into `buf`.
//
// # Safety
// `s` must be a live handle; `buf` must be null or hold `len` bytes;
// `needed` must be null or writable.
enum L4sStatus l4s_scenario_id(const struct L4sScenario *s, char *buf, size_t len, size_t *needed);

// Runs one seeded trial. Identical (scenario, seed) pairs give identical
// results.
//
// # Safety
// `s` must be a live handle; `out` must be null or writable.
enum L4sStatus l4s_run_trial(const struct L4sScenario *s, uint64_t seed, struct L4sTrial **out);

// # Safety
// `t` must be null or a handle from [`l4s_run_trial`] not yet freed.
void l4s_trial_free(struct L4sTrial *t);

// Number of flows in the trial (1 or 2); 0 for a null handle.
//
// # Safety
// `t` must be null or a live trial handle.
size_t l4s_trial_flow_count(const struct L4sTrial *t);

// # Safety
// `t` must be a live trial handle; `out` must be null or writable.
enum L4sStatus l4s_trial_flow(const struct L4sTrial *t, size_t index, struct L4sFlowMetrics *out);

// Copies the calling thread's most recent error message into `buf`.
//
// # Safety
// `buf` must be null or hold `len` bytes; `needed` must be null or writable.
enum L4sStatus l4s_last_error(char *buf, size_t len, size_t *needed);

// Static, NUL-terminated name of a status code.
const char *l4s_status_str(enum L4sStatus status);

// Library version, NUL-terminated.
const char *l4s_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* L4S_SIM_H */
