/* Exercises the shared library through its C header only. */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "pico/pico.h"

static int failures = 0;

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: CHECK(%s) failed: %s\n", __FILE__,      \
              __LINE__, #cond, pico_last_error());                    \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static void test_builder(void) {
  pico_builder* b = NULL;
  char* text = NULL;
  CHECK(pico_builder_new(&b) == PICO_OK);
  CHECK(pico_builder_set(b, "collective", "allreduce") == PICO_OK);
  CHECK(pico_builder_set(b, "ranks", "2,4") == PICO_OK);
  CHECK(pico_builder_set(b, "sizes", "1KiB:4KiB:1") != PICO_OK);
  CHECK(strstr(pico_last_error(), "multiplier") != NULL);
  CHECK(pico_builder_set(b, "no_such_field", "1") != PICO_OK);
  CHECK(pico_builder_add_sweep(b, "rails=2,4") == PICO_OK);
  CHECK(pico_builder_text(b, &text) == PICO_OK);
  CHECK(text != NULL && strstr(text, "\"allreduce\"") != NULL);
  pico_string_free(text);
  pico_builder_free(b);
}

static void test_schedule(void) {
  pico_schedule* s = NULL;
  pico_cost_terms ct;
  char* text = NULL;
  double predicted = 0, simulated = -1;
  CHECK(pico_schedule_build("allreduce", "ring", 4, 4096, 4, &s) == PICO_OK);
  CHECK(pico_schedule_steps(s) == 6);
  CHECK(pico_schedule_cost_terms(s, 0, &ct) == PICO_OK);
  CHECK(ct.steps == 6 && ct.bytes_sent == 6144 && ct.reduced_elements == 768);
  CHECK(pico_schedule_cost_terms(s, 4, &ct) == PICO_E_USAGE);
  CHECK(pico_schedule_text(s, &text) == PICO_OK);
  CHECK(text != NULL && strncmp(text, "# ", 2) == 0);
  pico_string_free(text);
  /* 6 alpha + 6144 beta + 768 gamma, all exact in binary. */
  CHECK(pico_schedule_predict(s, 0.5, 0.25, 0.125, &predicted) == PICO_OK);
  CHECK(pico_schedule_simulate(s, 0.5, 0.25, 0.125, &simulated) == PICO_OK);
  CHECK(predicted == simulated);
  CHECK(predicted >= 3.0 + 1536.0 + 96.0);
  pico_schedule_free(s);

  s = NULL;
  CHECK(pico_schedule_build("allreduce", "recursive_doubling", 3, 3 * 64, 4, &s) ==
        PICO_E_UNSUPPORTED);
  CHECK(s == NULL);
  CHECK(pico_schedule_build("allreduce", "bogus", 4, 4096, 4, &s) != PICO_OK);
  CHECK(pico_schedule_build("allreduce", "ring", 4, 4094, 4, &s) == PICO_E_USAGE);
}

static void test_errors(void) {
  pico_report* r = NULL;
  CHECK(strcmp(pico_status_name(PICO_OK), "") != 0);
  CHECK(pico_validate_test("/nonexistent/test.json") == PICO_E_DANGLING_REFERENCE ||
        pico_validate_test("/nonexistent/test.json") == PICO_E_IO);
  CHECK(pico_run("/nonexistent/env.json", "/nonexistent/test.json", NULL, &r) != PICO_OK);
  CHECK(r == NULL);
  CHECK(strlen(pico_last_error()) > 0);
  CHECK(strlen(pico_version()) > 0);
}

int main(void) {
  test_builder();
  test_schedule();
  test_errors();
  if (failures) fprintf(stderr, "%d check(s) failed\n", failures);
  return failures ? 1 : 0;
}
