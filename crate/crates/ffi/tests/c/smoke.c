#include <math.h>
#include <stdio.h>
#include <string.h>

#include "evohom.h"

int main(void) {
    double pts[18];
    for (int k = 0; k < 6; k++) {
        double a = M_PI / 3.0 * k;
        pts[3 * k] = 8.0 * cos(a);
        pts[3 * k + 1] = 8.0 * sin(a);
        pts[3 * k + 2] = 0.0;
    }
    EvohomSystem *sys = NULL;
    if (evohom_system_new(pts, 6, 3, NULL, &sys) != EVOHOM_STATUS_OK) {
        fprintf(stderr, "system: %s\n", evohom_last_error());
        return 1;
    }
    EvohomResult *res = NULL;
    if (evohom_node_eh(sys, 0, &res) != EVOHOM_STATUS_OK) {
        fprintf(stderr, "node: %s\n", evohom_last_error());
        return 1;
    }
    double f[9];
    evohom_result_features(res, f);
    size_t count = 0;
    evohom_result_bars(res, 0, NULL, NULL, 0, &count);
    printf("nodes=%zu t_sync=%.17g bars0=%zu EH_inf_0=%.17g\n", evohom_system_nodes(sys), evohom_result_t_sync(res),
           count, f[0]);

    EvohomResult *bad = NULL;
    EvohomStatus st = evohom_node_eh(sys, 99, &bad);
    printf("bad=%d null=%d msg=%s\n", (int)st, bad == NULL, evohom_last_error());

    evohom_result_free(res);
    evohom_system_free(sys);
    return 0;
}
