#ifndef WECSTORE_H
#define WECSTORE_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum WecStatus {
  WEC_STATUS_OK = 0,
  WEC_STATUS_NULL_ARGUMENT = 1,
  WEC_STATUS_INVALID_UTF8 = 2,
  WEC_STATUS_IDENTIFIER = 3,
  WEC_STATUS_NOT_FOUND = 4,
  WEC_STATUS_DUPLICATE = 5,
  WEC_STATUS_CATALOG = 6,
  WEC_STATUS_STORE = 7,
  WEC_STATUS_PREPROCESS = 8,
  WEC_STATUS_IO = 9,
  WEC_STATUS_BUFFER_TOO_SMALL = 10,
  WEC_STATUS_OTHER = 11,
  WEC_STATUS_PANIC = 12,
} WecStatus;

/**
 * Opaque catalog handle.
 */
typedef struct WecCatalog WecCatalog;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *wec_last_error(void);

/**
 * Opens the catalog at `root`.
 *
 * # Safety
 * `root` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum WecStatus wec_catalog_open(const char *root, bool create_if_missing, struct WecCatalog **out);

/**
 * Releases a catalog handle. Null is ignored.
 *
 * # Safety
 * `catalog` must come from [`wec_catalog_open`] and not be used afterwards.
 */
void wec_catalog_close(struct WecCatalog *catalog);

/**
 * Registers `identifier` with its default pipeline and imports the text
 * file at `path`. `out_imported` may be null.
 *
 * # Safety
 * Pointer arguments must be valid; strings NUL-terminated.
 */
enum WecStatus wec_catalog_import(const struct WecCatalog *catalog,
                                  const char *path,
                                  const char *identifier,
                                  uint64_t *out_imported);

/**
 * Number of records in the WEC.
 *
 * # Safety
 * Pointer arguments must be valid; strings NUL-terminated.
 */
enum WecStatus wec_catalog_vocab_size(const struct WecCatalog *catalog,
                                      const char *identifier,
                                      uint64_t *out);

/**
 * Vector length of the WEC.
 *
 * # Safety
 * Pointer arguments must be valid; strings NUL-terminated.
 */
enum WecStatus wec_catalog_dims(const struct WecCatalog *catalog,
                                const char *identifier,
                                size_t *out);

/**
 * Whether `word` has a vector.
 *
 * # Safety
 * Pointer arguments must be valid; strings NUL-terminated.
 */
enum WecStatus wec_catalog_contains(const struct WecCatalog *catalog,
                                    const char *identifier,
                                    const char *word,
                                    bool *out);

/**
 * Copies the vector of `word` into `buf`. `out_dims` always receives the
 * vector length; a `buf_len` smaller than it gives `BufferTooSmall`.
 * A word without a vector gives `NotFound`.
 *
 * # Safety
 * `buf` must hold `buf_len` floats; other pointers must be valid.
 */
enum WecStatus wec_catalog_get_vector(const struct WecCatalog *catalog,
                                      const char *identifier,
                                      const char *word,
                                      float *buf,
                                      size_t buf_len,
                                      size_t *out_dims);

/**
 * Runs a retrieval for `count` input units and returns the result as JSON
 * in `out_json` (free with [`wec_string_free`]). With `raw` each unit is a
 * sentence preprocessed per WEC; otherwise a whitespace-separated word list.
 * The handle's preprocessing cache is shared across calls.
 *
 * # Safety
 * `units` must point to `count` valid NUL-terminated strings.
 */
enum WecStatus wec_get_vectors_json(const struct WecCatalog *catalog,
                                    const char *query,
                                    const char *const *units,
                                    size_t count,
                                    bool raw,
                                    bool in_order,
                                    char **out_json);

/**
 * Cosine distance of two vectors of length `len`. A zero vector gives
 * `Other` with an explanatory message.
 *
 * # Safety
 * `a` and `b` must each hold `len` floats.
 */
enum WecStatus wec_cosine_distance(const float *a, const float *b, size_t len, double *out);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void wec_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WECSTORE_H */
