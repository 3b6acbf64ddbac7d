#ifndef NEDKIT_H
#define NEDKIT_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NedStatus {
  NED_STATUS_OK = 0,
  NED_STATUS_NULL_POINTER = 1,
  NED_STATUS_INVALID_UTF8 = 2,
  NED_STATUS_INVALID_ARGUMENT = 3,
  NED_STATUS_IO = 4,
  NED_STATUS_MISSING_INPUT = 5,
  NED_STATUS_PARSE = 6,
  NED_STATUS_DIM_MISMATCH = 7,
  NED_STATUS_EMPTY_INPUT = 8,
  NED_STATUS_UNKNOWN_ENTITY = 9,
  NED_STATUS_OUT_OF_RANGE = 10,
  NED_STATUS_PANIC = 11,
  NED_STATUS_DATA = 12,
} NedStatus;

/**
 * Opaque ranked candidate list.
 */
typedef struct NedCandidates NedCandidates;

/**
 * Opaque candidate index handle.
 */
typedef struct NedIndex NedIndex;

/**
 * Opaque knowledge base handle.
 */
typedef struct NedKb NedKb;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until
 * the next call into the library from the same thread.
 */
const char *ned_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *ned_version(void);

/**
 * Loads a JSONL knowledge base.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum NedStatus ned_kb_load(const char *path, struct NedKb **out);

/**
 * # Safety
 * `kb` must be a live handle; `out` must be writable.
 */
enum NedStatus ned_kb_len(const struct NedKb *kb, size_t *out);

/**
 * # Safety
 * `kb` must be a live handle, `id` NUL-terminated, `out` writable.
 */
enum NedStatus ned_kb_contains(const struct NedKb *kb, const char *id, bool *out);

/**
 * # Safety
 * `kb` must be NULL or a handle from [`ned_kb_load`] not yet freed.
 */
void ned_kb_free(struct NedKb *kb);

/**
 * Builds an index by hash-embedding every entity of `kb` with default
 * sequence limits and canonical-name titles.
 *
 * # Safety
 * `kb` must be a live handle; `out` must be writable.
 */
enum NedStatus ned_index_from_kb(const struct NedKb *kb,
                                 size_t dim,
                                 uint64_t seed,
                                 struct NedIndex **out);

/**
 * Builds an index from a text or binary vector file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum NedStatus ned_index_load(const char *path, struct NedIndex **out);

/**
 * # Safety
 * `index` must be a live handle; outputs must be writable.
 */
enum NedStatus ned_index_info(const struct NedIndex *index, size_t *out_len, size_t *out_dim);

/**
 * Exact top-`k` by inner product, ties by ascending id.
 *
 * # Safety
 * `index` must be a live handle, `query` must point to `dim` doubles and
 * `out` must be writable.
 */
enum NedStatus ned_index_top_k(const struct NedIndex *index,
                               const double *query,
                               size_t dim,
                               size_t k,
                               struct NedCandidates **out);

/**
 * # Safety
 * `index` must be NULL or a handle not yet freed.
 */
void ned_index_free(struct NedIndex *index);

/**
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
enum NedStatus ned_candidates_len(const struct NedCandidates *c, size_t *out);

/**
 * Entity id and score at rank `i`. The id stays valid until the list is freed.
 *
 * # Safety
 * `c` must be a live handle; outputs must be writable.
 */
enum NedStatus ned_candidates_get(const struct NedCandidates *c,
                                  size_t i,
                                  const char **out_id,
                                  double *out_score);

/**
 * # Safety
 * `c` must be NULL or a handle not yet freed.
 */
void ned_candidates_free(struct NedCandidates *c);

/**
 * Hash-embeds the whitespace words of `text` into `out[0..dim]`.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must hold `dim` doubles.
 */
enum NedStatus ned_hash_embed(const char *text, size_t dim, uint64_t seed, double *out);

/**
 * Normalized Levenshtein similarity of the case-folded strings.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated; `out` must be writable.
 */
enum NedStatus ned_string_similarity(const char *a, const char *b, double *out);

/**
 * Softmax of `scores[0..n]` into `out[0..n]`.
 *
 * # Safety
 * `scores` and `out` must each hold `n` doubles.
 */
enum NedStatus ned_softmax(const double *scores, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEDKIT_H */
