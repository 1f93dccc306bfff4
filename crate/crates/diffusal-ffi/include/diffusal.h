#ifndef DIFFUSAL_H
#define DIFFUSAL_H

/* Generated by cbindgen from diffusal-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes for every API call.
typedef enum DalStatus {
  DAL_STATUS_OK = 0,
  // A required pointer argument was null.
  DAL_STATUS_NULL_ARGUMENT = 1,
  // An argument value was rejected; see the last error message.
  DAL_STATUS_INVALID_ARGUMENT = 2,
  // Reading or writing a file failed.
  DAL_STATUS_IO = 3,
  // A buffer was too small for the requested data.
  DAL_STATUS_BUFFER_TOO_SMALL = 4,
  // A panic or other internal failure; see the last error message.
  DAL_STATUS_INTERNAL = 5,
} DalStatus;

// A dataset restricted to its largest connected component with
// L1-normalized features, ready for diffusion.
typedef struct DalDataset DalDataset;

// A diffusion operator with its propagated features and importance scores.
typedef struct DalDiffusion DalDiffusion;

// Scalar knobs for [`dal_run`]; get defaults from
// [`dal_run_options_default`] before overriding fields.
typedef struct DalRunOptions {
  double epsilon;
  size_t members;
  size_t hidden;
  double dropout;
  double learning_rate;
  double weight_decay;
  size_t max_epochs;
  size_t patience;
  size_t val_size;
  size_t budget_max_multiple;
  size_t step_multiple;
  size_t kmeans_restarts;
  bool two_hop;
  bool additive_combine;
  bool use_uncertainty;
  bool use_diversity;
  bool use_importance;
} DalRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread. Never null.
const char *dal_last_error_message(void);

// Static version string of the underlying library.
const char *dal_version(void);

// Loads a dataset directory (graph.edges, features.csv, labels.csv,
// meta.json), keeps the largest connected component, and L1-normalizes the
// features. On success `*out` owns the new handle.
//
// # Safety
// `dir` must be a valid NUL-terminated string and `out` a valid pointer.
enum DalStatus dal_dataset_load(const char *dir, struct DalDataset **out);

// Releases a dataset handle. Null is a no-op.
//
// # Safety
// `ds` must be a handle from [`dal_dataset_load`] not freed before.
void dal_dataset_free(struct DalDataset *ds);

// Number of nodes in the prepared dataset.
//
// # Safety
// `ds` must be a live dataset handle; `out` a valid pointer.
enum DalStatus dal_dataset_num_nodes(const struct DalDataset *ds, size_t *out);

// Number of undirected edges in the prepared dataset.
//
// # Safety
// `ds` must be a live dataset handle; `out` a valid pointer.
enum DalStatus dal_dataset_num_edges(const struct DalDataset *ds, size_t *out);

// Number of label classes.
//
// # Safety
// `ds` must be a live dataset handle; `out` a valid pointer.
enum DalStatus dal_dataset_num_classes(const struct DalDataset *ds, size_t *out);

// Width of the feature matrix.
//
// # Safety
// `ds` must be a live dataset handle; `out` a valid pointer.
enum DalStatus dal_dataset_feature_dim(const struct DalDataset *ds, size_t *out);

// Builds the diffusion operator for a dataset: the sum of push-approximated
// personalized-PageRank matrices over `alphas` (or the squared normalized
// adjacency when `two_hop` is set), plus propagated features and
// importance scores. On success `*out` owns the new handle.
//
// # Safety
// `ds` must be a live dataset handle; `alphas` must point to `num_alphas`
// doubles; `out` must be a valid pointer.
enum DalStatus dal_diffusion_compute(const struct DalDataset *ds,
                                     const double *alphas,
                                     size_t num_alphas,
                                     double epsilon,
                                     bool two_hop,
                                     struct DalDiffusion **out);

// Releases a diffusion handle. Null is a no-op.
//
// # Safety
// `diff` must be a handle from [`dal_diffusion_compute`] not freed before.
void dal_diffusion_free(struct DalDiffusion *diff);

// Number of stored nonzeros in the diffusion matrix.
//
// # Safety
// `diff` must be a live diffusion handle; `out` a valid pointer.
enum DalStatus dal_diffusion_nnz(const struct DalDiffusion *diff, size_t *out);

// Copies the per-node importance scores (normalized over all nodes) into
// `out`, which must hold exactly one double per node.
//
// # Safety
// `diff` must be a live diffusion handle; `out` must point to `len`
// writable doubles.
enum DalStatus dal_diffusion_importance(const struct DalDiffusion *diff, double *out, size_t len);

// Copies the diffused feature matrix row-major into `out`, which must hold
// `num_nodes * feature_dim` doubles.
//
// # Safety
// `diff` must be a live diffusion handle; `out` must point to `len`
// writable doubles.
enum DalStatus dal_diffusion_propagated(const struct DalDiffusion *diff, double *out, size_t len);

// Two-sided Welch t-test; writes the p-value to `out_p`.
//
// # Safety
// `a` and `b` must point to `a_len` and `b_len` doubles; `out_p` must be a
// valid pointer.
enum DalStatus dal_welch_t_test(const double *a,
                                size_t a_len,
                                const double *b,
                                size_t b_len,
                                double *out_p);

// Fills `out` with the default experiment options.
//
// # Safety
// `out` must be a valid pointer.
enum DalStatus dal_run_options_default(struct DalRunOptions *out);

// Runs one seeded experiment over the full budget grid and appends the
// result rows to `out_csv` (created with a header when missing).
// `strategy` is one of diffusal|random|entropy|degree|coreset.
//
// # Safety
// `dataset_dir`, `strategy`, and `out_csv` must be valid NUL-terminated
// strings; `alphas` must point to `num_alphas` doubles; `options` must be
// a valid pointer.
enum DalStatus dal_run(const char *dataset_dir,
                       const char *strategy,
                       const double *alphas,
                       size_t num_alphas,
                       uint64_t seed,
                       const struct DalRunOptions *options,
                       const char *out_csv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIFFUSAL_H */
