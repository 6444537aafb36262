#ifndef KEYED_NPHT_H
#define KEYED_NPHT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum KnStatus {
  KN_OK = 0,
  KN_INVALID_ARGUMENT = 1,
  KN_DOMAIN = 2,
  KN_DEGENERATE_VARIANCE = 3,
  KN_TRANSFORM_OVERFLOW = 4,
  KN_PARSE = 5,
  KN_IO = 6,
  KN_NULL_POINTER = 7,
  KN_PANIC = 8,
} KnStatus;

// p-value aggregation method.
typedef enum KnMethod {
  KN_STOUFFER = 0,
  KN_FISHER = 1,
  KN_PEARSON = 2,
} KnMethod;

// Opaque bundle of secret polynomial keys.
typedef struct KnKeyBundle KnKeyBundle;

typedef struct KnMwuResult {
  size_t n0;
  size_t n1;
  double r0;
  double r1;
  double u0;
  double u1;
  double u;
  double lambda_u;
  double sigma_u;
  double z;
  double p;
  // Number of tie groups; 0 means no tie correction was applied.
  size_t ties;
} KnMwuResult;

typedef struct KnMinDist {
  double delta;
  double delta_sq;
  size_t i;
  size_t j;
} KnMinDist;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread (empty if none).
const char *kn_last_error(void);

// Two-sided Mann-Whitney U test of `a[0..na]` against `b[0..nb]`.
//
// # Safety
// `a` and `b` must point to `na` and `nb` readable doubles; `out_result`
// must be writable.
enum KnStatus kn_mann_whitney_u(const double *a,
                                size_t na,
                                const double *b,
                                size_t nb,
                                struct KnMwuResult *out_result);

// Combines `n` p-values into Δ; `out_statistic` may be null.
//
// # Safety
// `p` must point to `n` readable doubles; `out_delta` must be writable.
enum KnStatus kn_combine(enum KnMethod method,
                         const double *p,
                         size_t n,
                         double *out_delta,
                         double *out_statistic);

// Generates `count` keys of degree `degree` over the coefficient set
// `coeffs[0..ncoeffs]`. Release the handle with [`kn_key_bundle_free`].
//
// # Safety
// `coeffs` must point to `ncoeffs` readable doubles; `out_bundle` must be
// writable.
enum KnStatus kn_keygen(size_t degree,
                        size_t count,
                        const double *coeffs,
                        size_t ncoeffs,
                        uint64_t seed,
                        struct KnKeyBundle **out_bundle);

// Parses a key file produced by [`kn_key_bundle_to_json`] or the CLI.
//
// # Safety
// `json` must be a NUL-terminated string; `out_bundle` must be writable.
enum KnStatus kn_key_bundle_from_json(const char *json, struct KnKeyBundle **out_bundle);

// Serializes a bundle; release the string with [`kn_string_free`].
//
// # Safety
// `bundle` must be a live handle; `out_json` must be writable.
enum KnStatus kn_key_bundle_to_json(const struct KnKeyBundle *b, char **out_json);

// Hex fingerprint of a bundle; release with [`kn_string_free`].
//
// # Safety
// `bundle` must be a live handle; `out_fingerprint` must be writable.
enum KnStatus kn_key_bundle_fingerprint(const struct KnKeyBundle *b, char **out_fingerprint);

// Number of keys in a bundle (0 for a null handle).
//
// # Safety
// `bundle` must be null or a live handle.
size_t kn_key_bundle_len(const struct KnKeyBundle *b);

// Releases a bundle handle. Null is ignored.
//
// # Safety
// `bundle` must be null or a handle not yet freed.
void kn_key_bundle_free(struct KnKeyBundle *b);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void kn_string_free(char *s);

// Keyed poison detection. `out_per_key_p` may be null; otherwise it must
// hold `kn_key_bundle_len(bundle)` doubles. `out_reject` receives 1 for
// reject and 0 for accept.
//
// # Safety
// Array arguments must point to the stated number of elements; handles
// must be live; output pointers must be writable or null where allowed.
enum KnStatus kn_detect(const struct KnKeyBundle *b,
                        const double *safe,
                        size_t nsafe,
                        const double *unknown,
                        size_t nunknown,
                        double threshold,
                        enum KnMethod method,
                        double *out_per_key_p,
                        double *out_delta,
                        int32_t *out_reject);

// Closest pair of `n` points stored as interleaved `x, y` doubles inside
// the square `[0, side)²`.
//
// # Safety
// `xy` must point to `2 * n` readable doubles; `out_result` must be
// writable.
enum KnStatus kn_min_pair_distance(const double *xy,
                                   size_t n,
                                   double side,
                                   struct KnMinDist *out_result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KEYED_NPHT_H */
