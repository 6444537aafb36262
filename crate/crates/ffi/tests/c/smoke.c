#include <math.h>
#include <stdio.h>
#include <string.h>

#include "keyed_npht.h"

static int failures = 0;

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            failures++;                                               \
        }                                                             \
    } while (0)

int main(void) {
    double a[] = {1, 2, 3, 4, 5};
    double b[] = {6, 7, 8, 9, 10};
    KnMwuResult r;
    CHECK(kn_mann_whitney_u(a, 5, b, 5, &r) == KN_OK);
    CHECK(r.u == 0.0);
    CHECK(fabs(r.p - 0.009023438818080326) < 1e-12);

    double same[] = {2, 2, 2};
    CHECK(kn_mann_whitney_u(same, 3, same, 3, &r) == KN_DEGENERATE_VARIANCE);
    CHECK(strlen(kn_last_error()) > 0);

    double half[] = {0.5, 0.5, 0.5};
    double delta = -1, stat = -1;
    CHECK(kn_combine(KN_STOUFFER, half, 3, &delta, &stat) == KN_OK);
    CHECK(delta == 0.5 && stat == 0.0);

    double coeffs[] = {-1, 0, 1};
    KnKeyBundle *keys = NULL;
    CHECK(kn_keygen(4, 9, coeffs, 3, 7, &keys) == KN_OK);
    CHECK(kn_key_bundle_len(keys) == 9);

    char *json = NULL;
    CHECK(kn_key_bundle_to_json(keys, &json) == KN_OK);
    KnKeyBundle *again = NULL;
    CHECK(kn_key_bundle_from_json(json, &again) == KN_OK);
    char *fp1 = NULL, *fp2 = NULL;
    CHECK(kn_key_bundle_fingerprint(keys, &fp1) == KN_OK);
    CHECK(kn_key_bundle_fingerprint(again, &fp2) == KN_OK);
    CHECK(strcmp(fp1, fp2) == 0);

    double per_key[9];
    int reject = -1;
    CHECK(kn_detect(keys, a, 5, b, 5, 0.01, KN_STOUFFER, per_key, &delta, &reject) == KN_OK);
    CHECK(reject == 0 || reject == 1);
    CHECK(delta >= 0.0 && delta <= 1.0);

    double xy[] = {0, 0, 10, 10, 10.5, 10, 50, 50};
    KnMinDist m;
    CHECK(kn_min_pair_distance(xy, 4, 100, &m) == KN_OK);
    CHECK(m.delta_sq == 0.25 && m.i == 1 && m.j == 2);

    CHECK(kn_min_pair_distance(NULL, 4, 100, &m) == KN_NULL_POINTER);

    kn_string_free(fp1);
    kn_string_free(fp2);
    kn_string_free(json);
    kn_key_bundle_free(again);
    kn_key_bundle_free(keys);
    kn_key_bundle_free(NULL);

    if (failures == 0) {
        printf("ok\n");
    }
    return failures == 0 ? 0 : 1;
}
