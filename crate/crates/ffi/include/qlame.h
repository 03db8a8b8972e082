#ifndef QLAME_H
#define QLAME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every entry point.
typedef enum QlameStatus {
  QLAME_STATUS_OK = 0,
  QLAME_STATUS_NULL_POINTER = 1,
  QLAME_STATUS_INVALID_ARGUMENT = 2,
  QLAME_STATUS_DOMAIN = 3,
  QLAME_STATUS_POLE = 4,
  QLAME_STATUS_NUMERICAL = 5,
  QLAME_STATUS_CONFIG = 6,
  QLAME_STATUS_IO = 7,
  QLAME_STATUS_OUT_OF_RANGE = 8,
  QLAME_STATUS_PANIC = 9,
} QlameStatus;

// Solutions of the Bethe equations at one multiplier.
typedef struct QlameBetheSet QlameBetheSet;

// Modular parameters `(γ, τ)`.
typedef struct QlameModular QlameModular;

// A difference operator.
typedef struct QlameOperator QlameOperator;

typedef struct QlameComplex {
  double re;
  double im;
} QlameComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread; empty after a
// success. Valid until the next call on the same thread.
const char *qlame_last_error_message(void);

// # Safety
// `s` must be null or a string returned by this library.
void qlame_string_free(char *s);

// `θ₁(z, τ)` with default series settings.
//
// # Safety
// `result` must be a valid pointer.
enum QlameStatus qlame_theta1(struct QlameComplex z,
                              struct QlameComplex tau,
                              struct QlameComplex *result);

// # Safety
// `result` must be a valid pointer; `*result` receives a new handle.
enum QlameStatus qlame_modular_new(struct QlameComplex gamma,
                                   struct QlameComplex tau,
                                   struct QlameModular **result);

// Modular data at `γ = √2/10`, `τ = i`.
//
// # Safety
// `result` must be a valid pointer.
enum QlameStatus qlame_modular_default(struct QlameModular **result);

// # Safety
// `md` must be null or a handle from this library, not used afterwards.
void qlame_modular_free(struct QlameModular *md);

// `[x] = θ(γx)/θ(γ)`.
//
// # Safety
// `md` must be a live handle and `result` a valid pointer.
enum QlameStatus qlame_bracket(const struct QlameModular *md,
                               struct QlameComplex x,
                               struct QlameComplex *result);

// The q-Lamé operator `L` for coupling `m`.
//
// # Safety
// `md` must be a live handle and `result` a valid pointer.
enum QlameStatus qlame_operator_l(const struct QlameModular *md,
                                  uint32_t m,
                                  struct QlameOperator **result);

// The family member `M_l`.
//
// # Safety
// `md` must be a live handle and `result` a valid pointer.
enum QlameStatus qlame_operator_m(const struct QlameModular *md,
                                  struct QlameComplex l,
                                  uint32_t m,
                                  struct QlameOperator **result);

// `N = M_{m+1} − S M_{m+1} S`.
//
// # Safety
// `md` must be a live handle and `result` a valid pointer.
enum QlameStatus qlame_operator_n(const struct QlameModular *md,
                                  uint32_t m,
                                  struct QlameOperator **result);

// `a ∘ b`.
//
// # Safety
// `a`, `b` must be live handles and `result` a valid pointer.
enum QlameStatus qlame_operator_compose(const struct QlameOperator *a,
                                        const struct QlameOperator *b,
                                        struct QlameOperator **result);

// # Safety
// `op` must be null or a handle from this library, not used afterwards.
void qlame_operator_free(struct QlameOperator *op);

// # Safety
// `op` must be a live handle and `result` a valid pointer.
enum QlameStatus qlame_operator_num_terms(const struct QlameOperator *op, size_t *result);

// Shift of term `index` and its coefficient evaluated at `x`.
//
// # Safety
// `op` must be a live handle; `shift` and `coeff` valid pointers.
enum QlameStatus qlame_operator_term(const struct QlameOperator *op,
                                     size_t index,
                                     struct QlameComplex x,
                                     struct QlameComplex *shift,
                                     struct QlameComplex *coeff);

// `(op f)(x)` for a callback `f`.
//
// # Safety
// `op` must be a live handle and `result` a valid pointer; `f` is called
// with `user_data` and must not unwind.
enum QlameStatus qlame_operator_apply(const struct QlameOperator *op,
                                      struct QlameComplex (*f)(struct QlameComplex x,
                                                               void *user_data),
                                      void *user_data,
                                      struct QlameComplex x,
                                      struct QlameComplex *result);

// Coefficient-wise comparison of `a` and `b` at `count` seeded samples
// avoiding both operators' poles.
//
// # Safety
// `a`, `b` must be live handles; `residual` and `equal` valid pointers.
enum QlameStatus qlame_operator_equal(const struct QlameOperator *a,
                                      const struct QlameOperator *b,
                                      size_t count,
                                      uint64_t seed,
                                      double tol,
                                      double *residual,
                                      bool *equal);

// Solve the Bethe equations at multiplier `c`.
//
// # Safety
// `md` must be a live handle and `result` a valid pointer.
enum QlameStatus qlame_bethe_solve(const struct QlameModular *md,
                                   struct QlameComplex c,
                                   uint32_t m,
                                   uint64_t seed,
                                   struct QlameBetheSet **result);

// # Safety
// `set` must be null or a handle from this library, not used afterwards.
void qlame_bethe_set_free(struct QlameBetheSet *set);

// # Safety
// `set` must be a live handle and `result` a valid pointer.
enum QlameStatus qlame_bethe_set_len(const struct QlameBetheSet *set, size_t *result);

// Roots, multiplier, residual and eigenvalues `(ε_L, ε_N)` of solution
// `index`. `t` must have room for `t_capacity ≥ m` entries.
//
// # Safety
// `set` must be a live handle; `t` must point to `t_capacity` writable
// entries; the remaining out-pointers must be valid.
enum QlameStatus qlame_bethe_set_point(const struct QlameBetheSet *set,
                                       size_t index,
                                       struct QlameComplex *t,
                                       size_t t_capacity,
                                       struct QlameComplex *c,
                                       double *residual,
                                       struct QlameComplex *eps_l_out,
                                       struct QlameComplex *eps_n_out);

// JSON array of `{m, gamma, tau, t, c, residual}` records.
//
// # Safety
// `set` must be a live handle and `json` a valid pointer.
enum QlameStatus qlame_bethe_set_to_json(const struct QlameBetheSet *set, char **json);

// Run the verification suites. `config` holds `key=value` lines (or is
// null for the defaults). The JSON report is written to `*json`.
//
// # Safety
// `config` must be null or NUL-terminated; `json` and `overall_pass`
// valid pointers.
enum QlameStatus qlame_verify(const char *config, char **json, bool *overall_pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QLAME_H */
