#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "selfsim.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      const char *e = selfsim_last_error();                           \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, e ? e : ""); \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  SelfsimProblem *pb = NULL;
  CHECK(selfsim_problem_new(3.0, 1.2, -0.7, 3, false, &pb) == SELFSIM_STATUS_OK);

  SelfsimExponents ex;
  CHECK(selfsim_problem_exponents(pb, &ex) == SELFSIM_STATUS_OK);
  CHECK(fabs(ex.alpha - 1.3) < 1e-12 && fabs(ex.beta - 1.8) < 1e-12);

  SelfsimShot *shot = NULL;
  CHECK(selfsim_shoot(pb, 1.0, NULL, &shot) == SELFSIM_STATUS_OK);
  SelfsimShotSummary sum;
  CHECK(selfsim_shot_summary(shot, &sum) == SELFSIM_STATUS_OK);
  CHECK(sum.kind == SELFSIM_SHOT_KIND_GROW_UP);
  double *xi = malloc(sum.trace_len * sizeof(double));
  CHECK(selfsim_shot_trace(shot, xi, NULL, NULL, sum.trace_len) == SELFSIM_STATUS_OK);
  CHECK(xi[0] > 0.0 && xi[sum.trace_len - 1] > xi[0]);
  free(xi);
  selfsim_shot_free(shot);

  SelfsimInterface iface;
  SelfsimOptions opts = selfsim_options_default();
  CHECK(selfsim_find_interface(pb, &opts, &iface) == SELFSIM_STATUS_OK);
  CHECK(fabs(iface.d_star / 2.83438477e-3 - 1.0) < 1e-6);

  char *json = NULL;
  CHECK(selfsim_catalog_json(pb, &json) == SELFSIM_STATUS_OK);
  CHECK(json[0] == '{');
  selfsim_string_free(json);

  SelfsimProblem *bad = NULL;
  CHECK(selfsim_problem_new(3.0, 1.9, -0.7, 3, false, &bad) == SELFSIM_STATUS_VALIDATION);
  CHECK(bad == NULL && selfsim_last_error() != NULL);

  selfsim_problem_free(pb);
  printf("ok\n");
  return 0;
}
