#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "ris_isac.h"

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond,   \
              ris_isac_last_error_message());                          \
      return 1;                                                        \
    }                                                                  \
  } while (0)

int main(void) {
  RisIsacScenario *sc = NULL;
  CHECK(ris_isac_scenario_from_preset(RIS_ISAC_PRESET_DESK, 0, &sc) ==
        RIS_ISAC_STATUS_OK);

  RisIsacReport *rep = NULL;
  CHECK(ris_isac_run(sc, RIS_ISAC_SCHEME_PROPOSED, 1, &rep) ==
        RIS_ISAC_STATUS_OK);
  double p = ris_isac_report_final_power(rep);
  CHECK(isfinite(p) && p > 0.0);

  size_t n = 0;
  CHECK(ris_isac_report_phases(rep, NULL, 0, &n) ==
        RIS_ISAC_STATUS_BUFFER_TOO_SMALL);
  double *phases = malloc(n * sizeof(double));
  CHECK(ris_isac_report_phases(rep, phases, n, &n) == RIS_ISAC_STATUS_OK);
  for (size_t i = 0; i < n; i++) CHECK(phases[i] >= 0.0 && phases[i] < 6.2832);
  free(phases);

  const char *why = ris_isac_report_stop_reason(rep);
  CHECK(strcmp(why, "converged") == 0 || strcmp(why, "max-iterations") == 0);

  CHECK(ris_isac_run(sc, 99, 1, &rep) == RIS_ISAC_STATUS_INVALID_ARGUMENT);
  CHECK(rep == NULL);
  CHECK(strlen(ris_isac_last_error_message()) > 0);

  ris_isac_scenario_free(sc);
  printf("ok %s %zu %.6g\n", ris_isac_version(), n, p);
  return 0;
}
