#ifndef QSVM_LAB_H
#define QSVM_LAB_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum QsvmStatus {
  QSVM_STATUS_OK = 0,
  // A required pointer argument was NULL.
  QSVM_STATUS_NULL_POINTER = 1,
  // A string was not UTF-8, a size was zero, or a value was out of range.
  QSVM_STATUS_INVALID_ARGUMENT = 2,
  QSVM_STATUS_CONFIG = 3,
  QSVM_STATUS_DATA = 4,
  QSVM_STATUS_CIRCUIT = 5,
  QSVM_STATUS_DEGENERATE_DATA = 6,
  QSVM_STATUS_SERIALIZATION = 7,
  QSVM_STATUS_IO = 8,
  // The library panicked. The handle arguments should not be reused.
  QSVM_STATUS_INTERNAL = 9,
} QsvmStatus;

// Opaque trained variational classifier.
typedef struct QsvmQv QsvmQv;

// Opaque trained hybrid classifier.
typedef struct QsvmQvk QsvmQvk;

// Opaque trained SVM (quantum or classical kernel).
typedef struct QsvmSvm QsvmSvm;

// Confusion counts and indicators. Undefined ratios (0/0) are NaN.
typedef struct QsvmIndicators {
  double accuracy;
  double precision;
  double recall;
  double specificity;
  double f1;
  uint64_t tp;
  uint64_t fp;
  uint64_t fn_;
  uint64_t tn;
} QsvmIndicators;

// Gradient-descent settings for the variational and hybrid models.
typedef struct QsvmFitConfig {
  double learning_rate;
  size_t epochs;
  size_t layers;
  // 0 means full batch.
  size_t batch_size;
  uint64_t seed;
  double init_scale;
} QsvmFitConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL if the last
// call succeeded. Valid until the next call on the same thread.
const char *qsvm_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *qsvm_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a string returned through a `char **` argument of this
// library that has not been freed yet.
void qsvm_string_free(char *s);

// Evaluates `k(x1, x2)` for two vectors of `n_features` values.
//
// # Safety
// `kernel_json` must be a NUL-terminated string, `x1` and `x2` must point to
// `n_features` doubles and `out` to one writable double.
enum QsvmStatus qsvm_kernel_eval(const char *kernel_json,
                                 const double *x1,
                                 const double *x2,
                                 size_t n_features,
                                 double *out);

// Fills `out` (row-major, `n_rows * n_rows`) with the Gram matrix of `x`.
//
// # Safety
// `x` must point to `n_rows * n_features` doubles and `out` to
// `n_rows * n_rows` writable doubles.
enum QsvmStatus qsvm_gram_matrix(const char *kernel_json,
                                 const double *x,
                                 size_t n_rows,
                                 size_t n_features,
                                 double *out);

// Confusion counts and indicators with +1 as the positive class.
//
// # Safety
// `y_true` and `y_pred` must point to `n` labels and `out` to one writable
// struct.
enum QsvmStatus qsvm_indicators(const int8_t *y_true,
                                const int8_t *y_pred,
                                size_t n,
                                struct QsvmIndicators *out);

// Trains a soft-margin SVM with SMO.
//
// # Safety
// `x` must point to `n_rows * n_features` doubles, `y` to `n_rows` labels
// and `out` to a writable handle pointer.
enum QsvmStatus qsvm_svm_train(const char *kernel_json,
                               const double *x,
                               const int8_t *y,
                               size_t n_rows,
                               size_t n_features,
                               double c,
                               uint64_t seed,
                               struct QsvmSvm **out);

// Decision values `f(x)` for `n_rows` samples.
//
// # Safety
// `model` must be a live handle, `x` must point to `n_rows * n_features`
// doubles and `out` to `n_rows` writable doubles.
enum QsvmStatus qsvm_svm_decision(const struct QsvmSvm *model,
                                  const double *x,
                                  size_t n_rows,
                                  size_t n_features,
                                  double *out);

// Predicted labels (+1 or -1) for `n_rows` samples.
//
// # Safety
// As for [`qsvm_svm_decision`], with `out` pointing to `n_rows` labels.
enum QsvmStatus qsvm_svm_predict(const struct QsvmSvm *model,
                                 const double *x,
                                 size_t n_rows,
                                 size_t n_features,
                                 int8_t *out);

// Serializes the model to JSON. Free the result with [`qsvm_string_free`].
//
// # Safety
// `model` must be a live handle and `out` a writable pointer.
enum QsvmStatus qsvm_svm_to_json(const struct QsvmSvm *model, char **out);

// Restores a model serialized by [`qsvm_svm_to_json`].
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum QsvmStatus qsvm_svm_from_json(const char *json, struct QsvmSvm **out);

// Releases an SVM handle. NULL is ignored.
//
// # Safety
// `model` must be NULL or a live handle; it is invalid afterwards.
void qsvm_svm_free(struct QsvmSvm *model);

// Default settings for the variational classifier.
struct QsvmFitConfig qsvm_fit_config_qv_default(void);

// Default settings for the hybrid classifier.
struct QsvmFitConfig qsvm_fit_config_qvk_default(void);

// Trains the variational classifier. The held-out set only feeds the
// per-epoch trace. If `trace_csv` is not NULL it receives the trace as CSV;
// free it with [`qsvm_string_free`].
//
// # Safety
// Feature pointers must hold `n_train * n_features` and
// `n_test * n_features` doubles, label pointers `n_train` and `n_test`
// labels; `config` must point to a valid struct and `out` be writable.
enum QsvmStatus qsvm_qv_train(const double *x_train,
                              const int8_t *y_train,
                              size_t n_train,
                              const double *x_test,
                              const int8_t *y_test,
                              size_t n_test,
                              size_t n_features,
                              const struct QsvmFitConfig *config,
                              struct QsvmQv **out,
                              char **trace_csv);

// Raw scores `⟨Z₀⟩ + b` for `n_rows` samples.
//
// # Safety
// `model` must be a live handle, `x` must point to `n_rows * n_features`
// doubles and `out` to `n_rows` writable doubles.
enum QsvmStatus qsvm_qv_scores(const struct QsvmQv *model,
                               const double *x,
                               size_t n_rows,
                               size_t n_features,
                               double *out);

// Serializes the model to JSON. Free the result with [`qsvm_string_free`].
//
// # Safety
// `model` must be a live handle and `out` a writable pointer.
enum QsvmStatus qsvm_qv_to_json(const struct QsvmQv *model, char **out);

// Restores a model serialized by [`qsvm_qv_to_json`].
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum QsvmStatus qsvm_qv_from_json(const char *json, struct QsvmQv **out);

// Releases a variational-model handle. NULL is ignored.
//
// # Safety
// `model` must be NULL or a live handle; it is invalid afterwards.
void qsvm_qv_free(struct QsvmQv *model);

// Trains the hybrid classifier jointly on ansatz angles, expansion weights
// and bias. Arguments as for [`qsvm_qv_train`].
//
// # Safety
// As for [`qsvm_qv_train`].
enum QsvmStatus qsvm_qvk_train(const double *x_train,
                               const int8_t *y_train,
                               size_t n_train,
                               const double *x_test,
                               const int8_t *y_test,
                               size_t n_test,
                               size_t n_features,
                               const struct QsvmFitConfig *config,
                               struct QsvmQvk **out,
                               char **trace_csv);

// Scores `Σ w_i k_θ(x_i, x) + b` for `n_rows` samples.
//
// # Safety
// As for [`qsvm_qv_scores`].
enum QsvmStatus qsvm_qvk_scores(const struct QsvmQvk *model,
                                const double *x,
                                size_t n_rows,
                                size_t n_features,
                                double *out);

// Serializes the model to JSON. Free the result with [`qsvm_string_free`].
//
// # Safety
// `model` must be a live handle and `out` a writable pointer.
enum QsvmStatus qsvm_qvk_to_json(const struct QsvmQvk *model, char **out);

// Restores a model serialized by [`qsvm_qvk_to_json`].
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum QsvmStatus qsvm_qvk_from_json(const char *json, struct QsvmQvk **out);

// Releases a hybrid-model handle. NULL is ignored.
//
// # Safety
// `model` must be NULL or a live handle; it is invalid afterwards.
void qsvm_qvk_free(struct QsvmQvk *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSVM_LAB_H */
