#include <math.h>
#include <stdio.h>

#include "oce_risk.h"

static int fail(const char *what) {
    char msg[256];
    oce_last_error(msg, sizeof msg);
    fprintf(stderr, "%s: %s\n", what, msg);
    return 1;
}

int main(void) {
    const double coin[2] = {0.5, 0.5};
    const double x[2] = {1.0, -1.0};
    OceSpace *space = NULL;
    OceUtility *exp_u = NULL;
    OceUtility *cvar = NULL;
    OceValue v;

    if (oce_space_new(coin, 2, &space) != OCE_STATUS_OK) return fail("space");
    if (oce_utility_exponential(&exp_u) != OCE_STATUS_OK) return fail("exponential");
    if (oce_utility_cvar(0.5, &cvar) != OCE_STATUS_OK) return fail("cvar");

    if (oce_value(space, exp_u, x, 2, &v) != OCE_STATUS_OK) return fail("value");
    printf("exponential %.17g\n", v.value);
    if (oce_value(space, cvar, x, 2, &v) != OCE_STATUS_OK) return fail("value");
    printf("cvar %.17g\n", v.value);

    OceDescriptor desc = {OCE_DESC_LP_DEVIATION, 2.0, 0.5};
    OceHull hull;
    double xstar[2];
    if (oce_hull(space, &desc, OCE_MODE_MONOTONE, NULL, x, 2, NULL, &hull, xstar) != OCE_STATUS_OK)
        return fail("hull");
    printf("hull %.17g %.17g\n", hull.primal, hull.dual);

    const double bad[2] = {0.3, 0.3};
    OceSpace *none = NULL;
    OceStatus s = oce_space_new(bad, 2, &none);
    char msg[256];
    oce_last_error(msg, sizeof msg);
    printf("invalid %d %s\n", (int)s, none == NULL ? "null" : "set");

    oce_utility_free(cvar);
    oce_utility_free(exp_u);
    oce_space_free(space);
    oce_space_free(NULL);
    return 0;
}
