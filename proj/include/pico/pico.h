#ifndef PICO_PICO_H
#define PICO_PICO_H

/*
 * C interface to the collective benchmarking core.
 *
 * All handles are opaque. Functions return a pico_status; on failure the
 * calling thread's pico_last_error() describes the problem. Strings handed
 * out through `char**` are owned by the caller and released with
 * pico_string_free(). Strings returned as `const char*` from a handle stay
 * valid until that handle is freed.
 */

#include <stddef.h>
#include <stdio.h>

#if defined(PICO_BUILDING_LIBRARY)
#define PICO_API __attribute__((visibility("default")))
#else
#define PICO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pico_status {
  PICO_OK = 0,
  PICO_E_USAGE = 1,
  PICO_E_UNSUPPORTED = 2,
  PICO_E_PARSE = 3,
  PICO_E_SCHEMA = 4,
  PICO_E_DANGLING_REFERENCE = 5,
  PICO_E_IO = 6,
  PICO_E_DEADLOCK = 7,
  PICO_E_VERIFICATION = 8,
  PICO_E_ABORTED = 9,
  PICO_E_NO_TERMINAL = 10,
  PICO_E_INTERNAL = 11,
  /* The call completed but at least one run directory failed. */
  PICO_E_RUNS_FAILED = 12
} pico_status;

PICO_API const char* pico_version(void);
PICO_API const char* pico_status_name(pico_status status);
/* Message of the last failed call on this thread; "" if none. */
PICO_API const char* pico_last_error(void);
PICO_API void pico_string_free(char* s);

/* ---- test descriptors ---------------------------------------------- */

typedef struct pico_builder pico_builder;

PICO_API pico_status pico_builder_new(pico_builder** out);
PICO_API void pico_builder_free(pico_builder* b);
/* key is a descriptor field (collective, algorithms, sizes, ranks, ...). */
PICO_API pico_status pico_builder_set(pico_builder* b, const char* key, const char* value);
/* "rails=2,4": one network-model variant per value. */
PICO_API pico_status pico_builder_add_sweep(pico_builder* b, const char* spec);
/* Canonical descriptor text; fails with PICO_E_SCHEMA if invalid. */
PICO_API pico_status pico_builder_text(const pico_builder* b, char** out);

PICO_API pico_status pico_validate_test(const char* test_path);
PICO_API pico_status pico_validate_env(const char* env_path);

/*
 * Interactive descriptor wizard over the given streams. With require_tty
 * set, fails with PICO_E_NO_TERMINAL when `in` is not a terminal.
 * env_path may be NULL. Returns PICO_E_ABORTED when the user quits.
 */
PICO_API pico_status pico_wizard_run(FILE* in, FILE* out, const char* output_path,
                                     const char* env_path, int require_tty);

/* ---- runs and reports ---------------------------------------------- */

typedef struct pico_report pico_report;

typedef struct pico_run_options {
  int timeout_ms; /* per-point deadlock timeout; 0 = default */
  int workers;    /* fabric worker threads; 0 = one per rank */
  FILE* progress; /* progress lines; NULL for silence */
} pico_run_options;

PICO_API pico_status pico_run(const char* env_path, const char* test_path,
                              const pico_run_options* options, pico_report** out);
/* output_root may be NULL to reuse the recorded one. */
PICO_API pico_status pico_replay(const char* metadata_path, const char* output_root,
                                 const pico_run_options* options, pico_report** out);

typedef struct pico_analyze_options {
  const char* out_dir;        /* NULL: <index dir>/analysis */
  const char* gain_reference; /* e.g. "ring" or "allreduce/ring"; NULL to skip */
  int phases;                 /* emit the phase breakdown */
  int tuning;                 /* emit the tuning rule file */
  int plots;                  /* also emit line and bar charts */
  const char* backend;        /* filters; NULL accepts any */
  const char* variant;
} pico_analyze_options;

PICO_API pico_status pico_analyze(const char* index_path, const pico_analyze_options* options,
                                  pico_report** out);

/* Traffic estimate for every algorithm and rank count of a descriptor at
   msg_bytes (0: the descriptor's largest size). policy is "block" or "rr". */
PICO_API pico_status pico_trace(const char* test_path, const char* topology_path,
                                const char* policy, size_t msg_bytes, const char* out_dir,
                                pico_report** out);

PICO_API void pico_report_free(pico_report* r);
/* Human-readable summary. */
PICO_API const char* pico_report_text(const pico_report* r);
/* Files written by the call. */
PICO_API size_t pico_report_output_count(const pico_report* r);
PICO_API const char* pico_report_output(const pico_report* r, size_t i);
/* Run directories (pico_run / pico_replay only). */
PICO_API size_t pico_report_run_count(const pico_report* r);
PICO_API const char* pico_report_run_path(const pico_report* r, size_t i);
PICO_API const char* pico_report_run_status(const pico_report* r, size_t i);
PICO_API const char* pico_report_run_error(const pico_report* r, size_t i);
PICO_API size_t pico_report_failed(const pico_report* r);
PICO_API const char* pico_report_index_path(const pico_report* r);

/* ---- schedules ----------------------------------------------------- */

typedef struct pico_schedule pico_schedule;

typedef struct pico_cost_terms {
  size_t steps;            /* A */
  size_t bytes_sent;       /* B */
  size_t reduced_elements; /* C */
  size_t bytes_received;
  size_t copy_bytes;
  size_t allocations;
} pico_cost_terms;

PICO_API pico_status pico_schedule_build(const char* collective, const char* algorithm, int ranks,
                                         size_t msg_bytes, size_t element_width,
                                         pico_schedule** out);
PICO_API void pico_schedule_free(pico_schedule* s);
PICO_API size_t pico_schedule_steps(const pico_schedule* s);
PICO_API pico_status pico_schedule_text(const pico_schedule* s, char** out);
PICO_API pico_status pico_schedule_cost_terms(const pico_schedule* s, int rank,
                                              pico_cost_terms* out);
/* Closed-form time in seconds on a single-class network. */
PICO_API pico_status pico_schedule_predict(const pico_schedule* s, double alpha, double beta,
                                           double gamma, double* seconds);
/* Simulated completion time (slowest rank) on the same network. */
PICO_API pico_status pico_schedule_simulate(const pico_schedule* s, double alpha, double beta,
                                            double gamma, double* seconds);

#ifdef __cplusplus
}
#endif

#endif
