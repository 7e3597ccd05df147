#ifndef SUBREG_H
#define SUBREG_H

#include <stddef.h>
#include <stdint.h>

/*
 Criteria family codes accepted by `family` parameters.
 */
enum SubregFamily
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  SUBREG_FAMILY_G = 1,
  SUBREG_FAMILY_PHI = 2,
};
#ifndef __cplusplus
typedef int32_t SubregFamily;
#endif // __cplusplus

enum SubregStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  SUBREG_STATUS_OK = 0,
  SUBREG_STATUS_NULL_POINTER = 1,
  SUBREG_STATUS_INVALID_UTF8 = 2,
  SUBREG_STATUS_INPUT = 3,
  SUBREG_STATUS_DIMENSION = 4,
  SUBREG_STATUS_OFF_GRAPH = 5,
  SUBREG_STATUS_DOMAIN = 6,
  SUBREG_STATUS_UNSUPPORTED = 7,
  SUBREG_STATUS_INVARIANT = 8,
  SUBREG_STATUS_PANIC = 9,
};
#ifndef __cplusplus
typedef int32_t SubregStatus;
#endif // __cplusplus

/*
 Strict slope variant codes accepted by `variant` parameters.
 */
enum SubregStrictVariant
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  SUBREG_STRICT_VARIANT_PLAIN = 0,
  SUBREG_STRICT_VARIANT_MODIFIED = 1,
  SUBREG_STRICT_VARIANT_UNIFORM = 2,
};
#ifndef __cplusplus
typedef int32_t SubregStrictVariant;
#endif // __cplusplus

/*
 Verdict codes written by `subreg_certify`; they match the CLI exit codes.
 */
enum SubregVerdict
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  SUBREG_VERDICT_HOLDS = 0,
  SUBREG_VERDICT_FAILS = 1,
  SUBREG_VERDICT_INCONCLUSIVE = 2,
};
#ifndef __cplusplus
typedef int32_t SubregVerdict;
#endif // __cplusplus

/*
 Opaque problem handle.
 */
typedef struct SubregProblem SubregProblem;

/*
 Value with its bracket; infinities are IEEE infinities.
 */
typedef struct SubregBracket {
  double value;
  double lower;
  double upper;
} SubregBracket;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null if none failed yet.

 The pointer stays valid until the next failing call on the same thread.
 */
const char *subreg_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *subreg_version(void);

/*
 Parses a problem spec and writes a new handle to `*out`.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable. The handle must be
 released with `subreg_problem_free`.
 */
SubregStatus subreg_problem_from_json(const char *json, struct SubregProblem **out);

/*
 Releases a handle; null is ignored.

 # Safety
 `p` must be null or a live handle from `subreg_problem_from_json`; it must not be used
 afterwards.
 */
void subreg_problem_free(struct SubregProblem *p);

/*
 Subregularity modulus inf g(y)/d(x, F⁻¹(ȳ)) at the final schedule step.

 # Safety
 `p` must be a live handle and `out` writable.
 */
SubregStatus subreg_modulus(const struct SubregProblem *p, struct SubregBracket *out);

/*
 Strict slope of the given family and variant.

 # Safety
 `p` must be a live handle and `out` writable.
 */
SubregStatus subreg_strict_slope(const struct SubregProblem *p,
                                 int32_t family_code,
                                 int32_t variant_code,
                                 struct SubregBracket *out);

/*
 Verdict of one condition. `gamma <= 0` selects the qualitative tables.

 # Safety
 `p` must be a live handle, `condition` a NUL-terminated string and `out` writable.
 */
SubregStatus subreg_certify(const struct SubregProblem *p,
                            int32_t family_code,
                            double gamma,
                            const char *condition,
                            SubregVerdict *out);

/*
 Value of a named quantity such as "modulus" or "dual.phi.plain".

 # Safety
 `p` must be a live handle, `quantity` a NUL-terminated string and `out` writable.
 */
SubregStatus subreg_quantity(const struct SubregProblem *p,
                             const char *quantity,
                             struct SubregBracket *out);

/*
 Full analysis report as JSON, written to `*out`; release it with `subreg_string_free`.

 # Safety
 `p` must be a live handle and `out` writable.
 */
SubregStatus subreg_analyze_json(const struct SubregProblem *p, char **out);

/*
 Releases a string returned by this library; null is ignored.

 # Safety
 `s` must be null or a pointer obtained from `subreg_analyze_json`, freed at most once.
 */
void subreg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBREG_H */
