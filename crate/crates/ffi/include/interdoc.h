#ifndef INTERDOC_H
#define INTERDOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call.
 */
typedef enum IdocStatus {
  IDOC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  IDOC_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  IDOC_STATUS_INVALID_UTF8 = 2,
  /**
   * A file could not be read or written.
   */
  IDOC_STATUS_IO = 3,
  /**
   * Input data failed validation (bad file contents, shape mismatch,
   * wrong checkpoint role, zero query, ...).
   */
  IDOC_STATUS_DATA = 4,
  /**
   * An argument was out of range (index position, buffer length).
   */
  IDOC_STATUS_OUT_OF_RANGE = 5,
  /**
   * An internal panic was caught.
   */
  IDOC_STATUS_PANIC = 6,
} IdocStatus;

/**
 * Corpus of documents.
 */
typedef struct IdocCorpus IdocCorpus;

/**
 * Retriever dual encoder loaded from a checkpoint.
 */
typedef struct IdocEncoder IdocEncoder;

/**
 * Document embedding index.
 */
typedef struct IdocIndex IdocIndex;

/**
 * Section reranker loaded from a checkpoint.
 */
typedef struct IdocReranker IdocReranker;

/**
 * Ranked `(id, score)` list. Document results carry doc ids; reranked
 * results carry `doc_id#section_id` keys.
 */
typedef struct IdocResults IdocResults;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a
 * success. Valid until the next call on this thread.
 */
const char *idoc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *idoc_version(void);

/**
 * Loads a retriever checkpoint.
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable.
 */
enum IdocStatus idoc_encoder_load(const char *path, struct IdocEncoder **out);

/**
 * Embedding width of the encoder, or 0 for a null handle.
 *
 * # Safety
 * `enc` is null or a live handle.
 */
size_t idoc_encoder_dim(const struct IdocEncoder *enc);

/**
 * Writes the query embedding into `buf`, which must hold exactly
 * `idoc_encoder_dim(enc)` floats.
 *
 * # Safety
 * `enc` is a live handle; `text` is a NUL-terminated string; `image_refs`
 * holds `num_refs` strings; `buf` is writable for `len` floats.
 */
enum IdocStatus idoc_encoder_embed_query(const struct IdocEncoder *enc,
                                         const char *text,
                                         const char *const *image_refs,
                                         size_t num_refs,
                                         float *buf,
                                         size_t len);

/**
 * # Safety
 * `enc` is null or a handle from [`idoc_encoder_load`], not yet freed.
 */
void idoc_encoder_free(struct IdocEncoder *enc);

/**
 * Loads a corpus JSONL file.
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable.
 */
enum IdocStatus idoc_corpus_load(const char *path, struct IdocCorpus **out);

/**
 * Number of documents, or 0 for a null handle.
 *
 * # Safety
 * `corpus` is null or a live handle.
 */
size_t idoc_corpus_len(const struct IdocCorpus *corpus);

/**
 * # Safety
 * `corpus` is null or a handle from [`idoc_corpus_load`], not yet freed.
 */
void idoc_corpus_free(struct IdocCorpus *corpus);

/**
 * Loads an index file.
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable.
 */
enum IdocStatus idoc_index_load(const char *path, struct IdocIndex **out);

/**
 * Embeds every document of `corpus` with all of its sections.
 *
 * # Safety
 * `corpus` and `enc` are live handles; `out` is writable.
 */
enum IdocStatus idoc_index_build(const struct IdocCorpus *corpus,
                                 const struct IdocEncoder *enc,
                                 struct IdocIndex **out);

/**
 * Writes the index to `path`.
 *
 * # Safety
 * `index` is a live handle; `path` is a NUL-terminated string.
 */
enum IdocStatus idoc_index_save(const struct IdocIndex *index, const char *path);

/**
 * Number of indexed documents, or 0 for a null handle.
 *
 * # Safety
 * `index` is null or a live handle.
 */
size_t idoc_index_len(const struct IdocIndex *index);

/**
 * # Safety
 * `index` is null or a handle from this library, not yet freed.
 */
void idoc_index_free(struct IdocIndex *index);

/**
 * Top-`k` documents by cosine for a query.
 *
 * # Safety
 * `index` and `enc` are live handles; `text` is a NUL-terminated string;
 * `image_refs` holds `num_refs` strings; `out` is writable.
 */
enum IdocStatus idoc_search(const struct IdocIndex *index,
                            const struct IdocEncoder *enc,
                            const char *text,
                            const char *const *image_refs,
                            size_t num_refs,
                            size_t k,
                            struct IdocResults **out);

/**
 * Loads a reranker checkpoint.
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable.
 */
enum IdocStatus idoc_reranker_load(const char *path, struct IdocReranker **out);

/**
 * Reranks every section of the documents in `docs` (a search result);
 * the output ids are `doc_id#section_id`, scores are probabilities.
 *
 * # Safety
 * `reranker`, `corpus` and `docs` are live handles; `text` is a
 * NUL-terminated string; `image_refs` holds `num_refs` strings; `out` is
 * writable.
 */
enum IdocStatus idoc_rerank(const struct IdocReranker *reranker,
                            const struct IdocCorpus *corpus,
                            const char *text,
                            const char *const *image_refs,
                            size_t num_refs,
                            const struct IdocResults *docs,
                            struct IdocResults **out);

/**
 * # Safety
 * `reranker` is null or a handle from [`idoc_reranker_load`], not yet freed.
 */
void idoc_reranker_free(struct IdocReranker *reranker);

/**
 * Number of results, or 0 for a null handle.
 *
 * # Safety
 * `res` is null or a live handle.
 */
size_t idoc_results_len(const struct IdocResults *res);

/**
 * Id at rank `i` (0-based), owned by `res`; null when out of range.
 *
 * # Safety
 * `res` is null or a live handle.
 */
const char *idoc_results_id(const struct IdocResults *res, size_t i);

/**
 * Score at rank `i` (0-based); NaN when out of range.
 *
 * # Safety
 * `res` is null or a live handle.
 */
double idoc_results_score(const struct IdocResults *res, size_t i);

/**
 * # Safety
 * `res` is null or a handle from this library, not yet freed.
 */
void idoc_results_free(struct IdocResults *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTERDOC_H */
