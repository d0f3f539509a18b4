#ifndef SATIRA_H
#define SATIRA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SatiraLabel {
  SATIRA_LABEL_FAKE = 0,
  SATIRA_LABEL_REAL = 1,
} SatiraLabel;

typedef enum SatiraNanPolicy {
  SATIRA_NAN_POLICY_PROPAGATE = 0,
  SATIRA_NAN_POLICY_OMIT = 1,
} SatiraNanPolicy;

typedef enum SatiraStatus {
  SATIRA_STATUS_OK = 0,
  SATIRA_STATUS_NULL_POINTER = 1,
  SATIRA_STATUS_INVALID_UTF8 = 2,
  SATIRA_STATUS_INVALID_ARGUMENT = 3,
  SATIRA_STATUS_IO = 4,
  SATIRA_STATUS_PARSE = 5,
  SATIRA_STATUS_DIMENSION_MISMATCH = 6,
  SATIRA_STATUS_INSUFFICIENT_DATA = 7,
  SATIRA_STATUS_MODEL_FORMAT = 8,
  SATIRA_STATUS_EMPTY_DOCUMENT = 9,
  SATIRA_STATUS_PANIC = 10,
  SATIRA_STATUS_OTHER = 11,
} SatiraStatus;

typedef enum SatiraTTestVariant {
  SATIRA_T_TEST_VARIANT_POOLED = 0,
  SATIRA_T_TEST_VARIANT_WELCH = 1,
} SatiraTTestVariant;

// Opaque phrase lexicon.
typedef struct SatiraLexicon SatiraLexicon;

// Opaque trained classifier.
typedef struct SatiraModel SatiraModel;

typedef struct SatiraTTestResult {
  double statistic;
  double p_value;
  double df;
  size_t n_a;
  size_t n_b;
} SatiraTTestResult;

// Per-class arrays are indexed by [`SatiraLabel`]; `confusion` is row-major
// `[gold][predicted]`.
typedef struct SatiraEvalReport {
  double accuracy;
  double macro_precision;
  double macro_recall;
  double macro_f1;
  double precision[2];
  double recall[2];
  double f1[2];
  size_t confusion[4];
} SatiraEvalReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static string that must not be freed.
const char *satira_version(void);

// Message of the last failed call on this thread, or NULL. Free the result
// with [`satira_string_free`].
char *satira_last_error_message(void);

// Release a string returned by this library. NULL is ignored.
void satira_string_free(char *s);

// Normalize Arabic text with the default settings (diacritics, Latin
// letters and special characters removed, whitespace collapsed).
enum SatiraStatus satira_normalize(const char *text, char **out);

// Load a phrase lexicon (one phrase per line, `#` comments).
enum SatiraStatus satira_lexicon_load(const char *name,
                                      const char *path,
                                      struct SatiraLexicon **out);

// Build a lexicon from newline-separated phrases held in memory.
enum SatiraStatus satira_lexicon_from_lines(const char *name,
                                            const char *lines,
                                            struct SatiraLexicon **out);

// Number of phrases in a lexicon.
size_t satira_lexicon_len(const struct SatiraLexicon *lexicon);

// Lexicon matches per token of `text`, after normalization.
enum SatiraStatus satira_lexicon_score(const struct SatiraLexicon *lexicon,
                                       const char *text,
                                       double *out);

void satira_lexicon_free(struct SatiraLexicon *lexicon);

// Share of verbs inflected for first person plural. `surfaces` and `tags`
// hold `len` strings each. `*defined` is false when there are no verbs, in
// which case `*out` is NaN.
enum SatiraStatus satira_fpp_verb_ratio(const char *const *surfaces,
                                        const char *const *tags,
                                        size_t len,
                                        double *out,
                                        bool *defined);

// Two-tailed two-sample t-test.
enum SatiraStatus satira_ttest(const double *a,
                               size_t n_a,
                               const double *b,
                               size_t n_b,
                               enum SatiraTTestVariant variant,
                               enum SatiraNanPolicy nan_policy,
                               struct SatiraTTestResult *out);

// Load a model file written by `satira train`.
enum SatiraStatus satira_model_load(const char *path, struct SatiraModel **out);

// Classify one document. The text is normalized first; `probability_fake`
// may be NULL.
enum SatiraStatus satira_model_predict(const struct SatiraModel *model,
                                       const char *text,
                                       enum SatiraLabel *label,
                                       double *probability_fake);

void satira_model_free(struct SatiraModel *model);

// Accuracy, per-class and macro precision/recall/F1, and the confusion
// matrix of `n` predictions against gold labels. Labels are
// [`SatiraLabel`] values passed as `int32_t`.
enum SatiraStatus satira_evaluate(const int32_t *predicted,
                                  const int32_t *gold,
                                  size_t n,
                                  struct SatiraEvalReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SATIRA_H */
