#ifndef CHRONOQA_H
#define CHRONOQA_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CqaStatus {
  CQA_STATUS_OK = 0,
  CQA_STATUS_NULL_POINTER = 1,
  CQA_STATUS_INVALID_UTF8 = 2,
  CQA_STATUS_VALIDATION = 3,
  CQA_STATUS_IO = 4,
  CQA_STATUS_NUMERICAL = 5,
  CQA_STATUS_CHECKPOINT = 6,
  CQA_STATUS_NOT_FOUND = 7,
  CQA_STATUS_BUFFER_TOO_SMALL = 8,
  CQA_STATUS_PANIC = 9,
} CqaStatus;

typedef enum CqaSplit {
  CQA_SPLIT_TRAIN = 0,
  CQA_SPLIT_DEV = 1,
  CQA_SPLIT_TEST = 2,
} CqaSplit;

/**
 * A loaded and validated corpus.
 */
typedef struct CqaCorpus CqaCorpus;

/**
 * A trained checkpoint with its context encodings for one corpus.
 */
typedef struct CqaModel CqaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next failing call.
 */
const char *cqa_last_error(void);

/**
 * Library version as a static string.
 */
const char *cqa_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library that has not been freed yet.
 */
void cqa_string_free(char *s);

/**
 * Loads `contexts.jsonl` and `questions.jsonl` from `data_dir` with the default subset boundaries.
 *
 * # Safety
 * `data_dir` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CqaStatus cqa_corpus_load(const char *data_dir, struct CqaCorpus **out);

/**
 * # Safety
 * `corpus` must be null or a handle from [`cqa_corpus_load`] that has not been freed yet.
 */
void cqa_corpus_free(struct CqaCorpus *corpus);

/**
 * Number of questions in `subset` (1-based) and `split`.
 *
 * # Safety
 * `corpus` must be a live handle and `out` a valid pointer.
 */
enum CqaStatus cqa_corpus_count(const struct CqaCorpus *corpus,
                                size_t subset,
                                enum CqaSplit split,
                                size_t *out);

/**
 * Loads a checkpoint and encodes the corpus contexts for it.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `corpus` a live handle and `out` a valid pointer.
 */
enum CqaStatus cqa_model_load(const char *path,
                              const struct CqaCorpus *corpus,
                              struct CqaModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`cqa_model_load`] that has not been freed yet.
 */
void cqa_model_free(struct CqaModel *model);

/**
 * Stage the checkpoint was trained through.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum CqaStatus cqa_model_stage(const struct CqaModel *model, size_t *out);

/**
 * Predicted answer for the question with id `question_id`. Empty means "no answer".
 * The string in `out` is released with [`cqa_string_free`].
 *
 * # Safety
 * Handles must be live, `question_id` NUL-terminated and `out` a valid pointer.
 */
enum CqaStatus cqa_model_predict(const struct CqaModel *model,
                                 const struct CqaCorpus *corpus,
                                 const char *question_id,
                                 char **out);

/**
 * Mean EM and F1 (0 to 100) of the model on one subset and split.
 *
 * # Safety
 * Handles must be live and the output pointers valid.
 */
enum CqaStatus cqa_model_evaluate(const struct CqaModel *model,
                                  const struct CqaCorpus *corpus,
                                  size_t subset,
                                  enum CqaSplit split,
                                  double *out_em,
                                  double *out_f1);

/**
 * Exact match of two answers after normalization, 0 or 1.
 *
 * # Safety
 * Both strings must be NUL-terminated and `out` a valid pointer.
 */
enum CqaStatus cqa_exact_match(const char *pred, const char *gold, double *out);

/**
 * Token-level F1 of two answers after normalization, in [0, 1].
 *
 * # Safety
 * Both strings must be NUL-terminated and `out` a valid pointer.
 */
enum CqaStatus cqa_token_f1(const char *pred, const char *gold, double *out);

/**
 * `max(d(s, pos) - d(s, neg) + margin, 0)` with the `p`-norm distance over `len` values.
 *
 * # Safety
 * Each vector must point to `len` readable doubles and `out` must be valid.
 */
enum CqaStatus cqa_triplet_margin_loss(const double *s,
                                       const double *pos,
                                       const double *neg,
                                       size_t len,
                                       double margin,
                                       double p,
                                       double *out);

/**
 * Writes the years mentioned in `text` to `years`, in order of appearance.
 * `out_len` always receives the number found; if it exceeds `cap` nothing is written
 * and `BufferTooSmall` is returned.
 *
 * # Safety
 * `text` must be NUL-terminated, `years` must hold `cap` ints (may be null when `cap` is 0)
 * and `out_len` must be valid.
 */
enum CqaStatus cqa_extract_years(const char *text, int32_t *years, size_t cap, size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHRONOQA_H */
