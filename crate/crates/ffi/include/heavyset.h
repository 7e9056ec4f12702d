/* C interface for the heavyset library.
 *
 * Every function returns an hs_status; results are written through out
 * pointers only on HS_OK. Handles and strings returned by the library are
 * owned by it: release scalars with hs_scalar_free and strings with
 * hs_string_free. All functions are safe to call from multiple threads on
 * distinct handles; a single handle must not be mutated concurrently
 * (the API never mutates, so sharing const handles is fine).
 */

#ifndef HEAVYSET_H
#define HEAVYSET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hs_status {
  HS_OK = 0,
  HS_ERR_NULL_ARGUMENT = 1, /* required pointer was NULL */
  HS_ERR_PARSE = 2,         /* text was not a valid exact scalar */
  HS_ERR_DOMAIN = 3,        /* argument outside the operation's domain */
  HS_ERR_FIELD_MISMATCH = 4, /* operands carry different radicands */
  HS_ERR_INVARIANT = 5,     /* an internal exact check failed */
  HS_ERR_RESOURCE = 6,      /* a work or size cap was exceeded */
  HS_ERR_UTF8 = 7,          /* text was not valid UTF-8 / contained NUL */
  HS_ERR_RANGE = 8,         /* result does not fit the output type */
  HS_ERR_PANIC = 9          /* internal panic, state is still consistent */
} hs_status;

/* Opaque exact scalar a + b*sqrt(D) with rational a, b. */
typedef struct hs_scalar hs_scalar;

/* Parse from text such as "1/3", "sqrt(2)-1", "(sqrt(5)-1)/2", "0.25". */
hs_status hs_scalar_parse(const char *text, hs_scalar **out);

/* Release a scalar handle; NULL is a no-op. */
void hs_scalar_free(hs_scalar *x);

/* Release a string returned by this library; NULL is a no-op. */
void hs_string_free(char *s);

/* Exact arithmetic. Mixing distinct radicands fails with
 * HS_ERR_FIELD_MISMATCH; division by zero with HS_ERR_DOMAIN. */
hs_status hs_scalar_add(const hs_scalar *a, const hs_scalar *b, hs_scalar **out);
hs_status hs_scalar_sub(const hs_scalar *a, const hs_scalar *b, hs_scalar **out);
hs_status hs_scalar_mul(const hs_scalar *a, const hs_scalar *b, hs_scalar **out);
hs_status hs_scalar_div(const hs_scalar *a, const hs_scalar *b, hs_scalar **out);

/* Exact comparison: writes -1, 0 or 1. */
hs_status hs_scalar_cmp(const hs_scalar *a, const hs_scalar *b, int32_t *out);

/* Exact sign of the value: -1, 0 or 1. */
hs_status hs_scalar_sign(const hs_scalar *x, int32_t *out);

/* Fractional part in [0, 1). */
hs_status hs_scalar_mod1(const hs_scalar *x, hs_scalar **out);

/* Exact floor; HS_ERR_RANGE when it does not fit an int64_t. */
hs_status hs_scalar_floor(const hs_scalar *x, int64_t *out);

/* Nearest double plus a rigorous bound: |x - *value| <= *bound. */
hs_status hs_scalar_to_double(const hs_scalar *x, double *value, double *bound);

/* Canonical text form; round-trips through hs_scalar_parse. */
hs_status hs_scalar_to_string(const hs_scalar *x, char **out);

/* Certified below-approximation table for an irrational level gamma in
 * (0, 1): `count` fractions p/q <= gamma with gamma - p/q < 1/q^2, as CSV
 * text "index,p,q,gap" (gap is an exact expression). */
hs_status hs_below_sequence_csv(const char *gamma, size_t count,
                                char **out_csv);

/* Dimension bound for boundary exponent psi = psi_num/psi_den, ambient
 * dimension d = dim_num/dim_den, approximation order k >= 1: psi on the
 * rational branch (rational_branch != 0), psi + (d - psi)/k otherwise.
 * Requires 0 <= psi < d. */
hs_status hs_theorem_bound(int64_t psi_num, int64_t psi_den, int64_t dim_num,
                           int64_t dim_den, uint32_t k,
                           int32_t rational_branch, double *out);

/* Strict-positivity walk on the circle: visits x, x+g, ..., x+(n-1)g mod 1
 * and accumulates S_j = (hits among first j) - j*gamma against the closed
 * interval [a_start, a_end]. Writes the least 1 <= j <= horizon with
 * S_j <= 0, or 0 when every partial sum stays positive (the point is heavy
 * at this horizon). All five scalar arguments are parsed like
 * hs_scalar_parse and must share one radicand. */
hs_status hs_first_failure_interval(const char *x, const char *g,
                                    const char *gamma, const char *a_start,
                                    const char *a_end, uint64_t horizon,
                                    uint64_t *out_first_failure);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* HEAVYSET_H */
