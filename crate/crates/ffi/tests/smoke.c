#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include "orlicz_var.h"

static const char *PROBLEM =
    "orlicz-var v1\n"
    "[domain]\n"
    "intervals = [0, 1] x [0, 1]\n"
    "resolution = 9x9\n"
    "[family]\n"
    "phi1 = power: 2\n"
    "phi2 = power: 2\n"
    "[data]\n"
    "f = 1\n";

int main(void) {
    OvProblem *p = NULL;
    if (ov_problem_parse(PROBLEM, &p) != OV_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", ov_last_error());
        return 1;
    }
    double x[2] = {0.5, 0.5}, v = 0.0;
    /* (t^2)* = s^2 / 4 */
    if (ov_conjugate(p, 1, x, 2, 3.0, &v) != OV_STATUS_OK || fabs(v - 2.25) > 1e-9) {
        fprintf(stderr, "conjugate: %g %s\n", v, ov_last_error());
        return 1;
    }
    OvField *u = NULL;
    double energy = 0.0;
    bool converged = false;
    if (ov_solve(p, &u, &energy, &converged) != OV_STATUS_OK || !converged) {
        fprintf(stderr, "solve: %s\n", ov_last_error());
        return 1;
    }
    size_t n = ov_field_len(u);
    double *buf = malloc(n * sizeof(double));
    ov_field_values(u, buf, n);
    printf("nodes=%zu u0=%.6f energy=%.6f\n", n, buf[0], energy);
    free(buf);
    ov_field_free(u);
    if (ov_conjugate(p, 7, x, 2, 1.0, &v) != OV_STATUS_INVALID_INPUT) {
        return 1;
    }
    ov_problem_free(p);
    return 0;
}
