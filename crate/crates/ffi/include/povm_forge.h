#ifndef POVM_FORGE_H
#define POVM_FORGE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PfStatus {
  PF_STATUS_OK = 0,
  PF_STATUS_NULL_POINTER = 1,
  PF_STATUS_INVALID_ARGUMENT = 2,
  PF_STATUS_INVALID_OBSERVABLE = 3,
  PF_STATUS_INVALID_CHANNEL = 4,
  PF_STATUS_DIMENSION_MISMATCH = 5,
  /**
   * A search proved that no solution exists.
   */
  PF_STATUS_INFEASIBLE = 6,
  /**
   * A search ran out of budget without a certificate either way.
   */
  PF_STATUS_UNDECIDED = 7,
  PF_STATUS_INTERNAL = 8,
} PfStatus;

typedef enum PfRelation {
  PF_RELATION_BELOW = 0,
  PF_RELATION_ABOVE = 1,
  PF_RELATION_EQUIVALENT = 2,
  PF_RELATION_INCOMPARABLE = 3,
  PF_RELATION_UNDECIDED = 4,
} PfRelation;

/**
 * Opaque channel handle.
 */
typedef struct PfChannel PfChannel;

/**
 * Opaque observable handle.
 */
typedef struct PfPovm PfPovm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *pf_last_error(void);

/**
 * Observable with `count` effects of shape `dim × dim`; `im` may be null
 * for real effects.
 *
 * # Safety
 * `re` (and `im` if non-null) must point to `count·dim·dim` doubles and
 * `out` must be writable.
 */
enum PfStatus pf_povm_new(size_t dim,
                          size_t count,
                          const double *re,
                          const double *im,
                          struct PfPovm **out);

/**
 * # Safety
 * `povm` must be null or a handle from this library not yet freed.
 */
void pf_povm_free(struct PfPovm *povm);

/**
 * # Safety
 * `povm` must be a live handle.
 */
size_t pf_povm_dim(const struct PfPovm *povm);

/**
 * # Safety
 * `povm` must be a live handle.
 */
size_t pf_povm_len(const struct PfPovm *povm);

/**
 * Copies effect `index` into `dim·dim` doubles at `re` and `im` (which may
 * be null).
 *
 * # Safety
 * `povm` must be a live handle and the outputs large enough.
 */
enum PfStatus pf_povm_effect(const struct PfPovm *povm, size_t index, double *re, double *im);

/**
 * Channel with `count` Kraus operators of shape `out_dim × in_dim`.
 *
 * # Safety
 * `re` (and `im` if non-null) must point to `count·out_dim·in_dim` doubles
 * and `out` must be writable.
 */
enum PfStatus pf_channel_new(size_t in_dim,
                             size_t out_dim,
                             size_t count,
                             const double *re,
                             const double *im,
                             struct PfChannel **out);

/**
 * # Safety
 * `channel` must be null or a handle from this library not yet freed.
 */
void pf_channel_free(struct PfChannel *channel);

/**
 * # Safety
 * `channel` must be a live handle.
 */
size_t pf_channel_in_dim(const struct PfChannel *channel);

/**
 * # Safety
 * `channel` must be a live handle.
 */
size_t pf_channel_out_dim(const struct PfChannel *channel);

/**
 * Applies the channel to an `in_dim × in_dim` operator and writes the
 * `out_dim × out_dim` image.
 *
 * # Safety
 * Inputs must hold `in_dim²` doubles, outputs `out_dim²`; imaginary
 * pointers may be null.
 */
enum PfStatus pf_channel_apply(const struct PfChannel *channel,
                               const double *re,
                               const double *im,
                               double *re_out,
                               double *im_out);

/**
 * Minimal output dimension of an instrument implementing the observable.
 *
 * # Safety
 * `povm` must be a live handle and `out` writable.
 */
enum PfStatus pf_min_outdim(const struct PfPovm *povm, size_t *out);

/**
 * # Safety
 * `povm` must be a live handle and `out` writable.
 */
enum PfStatus pf_is_extreme(const struct PfPovm *povm, bool *out);

/**
 * Minimally sufficient representative of the observable's equivalence
 * class, as a new handle.
 *
 * # Safety
 * `povm` must be a live handle and `out` writable.
 */
enum PfStatus pf_reduce(const struct PfPovm *povm, struct PfPovm **out);

/**
 * Least-disturbing channel of the observable, as a new handle.
 *
 * # Safety
 * `povm` must be a live handle and `out` writable.
 */
enum PfStatus pf_least_disturbing(const struct PfPovm *povm, struct PfChannel **out);

/**
 * Post-processing order between `a` and `b`: `Below` means `a` is a
 * post-processing of `b` and not conversely.
 *
 * # Safety
 * `a`, `b` must be live handles and `out` writable.
 */
enum PfStatus pf_compare(const struct PfPovm *a, const struct PfPovm *b, enum PfRelation *out);

/**
 * Observable `B'` on the minimal dilation space of `a` that reproduces `b`
 * after the least-disturbing measurement of `a`. Returns
 * `PF_STATUS_INFEASIBLE` or `PF_STATUS_UNDECIDED` when no witness is found.
 *
 * # Safety
 * `a`, `b` must be live handles and `out` writable.
 */
enum PfStatus pf_realize_observable(const struct PfPovm *a,
                                    const struct PfPovm *b,
                                    size_t budget,
                                    struct PfPovm **out);

/**
 * Channel `Γ` with `lambda = Γ∘Λ_A`, where `Λ_A` is the least-disturbing
 * channel of `a`. Status codes as for [`pf_realize_observable`].
 *
 * # Safety
 * `a`, `lambda` must be live handles and `out` writable.
 */
enum PfStatus pf_realize_channel(const struct PfPovm *a,
                                 const struct PfChannel *lambda,
                                 size_t budget,
                                 struct PfChannel **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POVM_FORGE_H */
