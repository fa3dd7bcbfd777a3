/*
 * C interface to the factored sparse coding library.
 *
 * Objects are opaque handles created by fsc_*_create / fsc_*_load functions
 * and released with the matching fsc_*_free. Every fallible call returns an
 * fsc_status; on failure a human-readable message for the calling thread is
 * available from fsc_last_error() until the next failing call.
 */
#ifndef FSC_FSC_H
#define FSC_FSC_H

#include <stddef.h>
#include <stdint.h>

#if defined(FSC_BUILDING_LIBRARY)
#define FSC_API __attribute__((visibility("default")))
#else
#define FSC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fsc_status {
  FSC_OK = 0,
  FSC_ERR_INVALID_ARGUMENT = 1,
  FSC_ERR_DIMENSION_MISMATCH = 2,
  FSC_ERR_ZERO_BASIS_VECTOR = 3,
  FSC_ERR_NON_FINITE = 4,
  FSC_ERR_FORMAT = 5,
  FSC_ERR_MISSING_DATA = 6,
  FSC_ERR_IO = 7,
  FSC_ERR_INTERNAL = 8
} fsc_status;

typedef enum fsc_model_kind {
  FSC_MODEL_FACTORED = 1,
  FSC_MODEL_BASELINE = 2
} fsc_model_kind;

typedef struct fsc_dataset fsc_dataset;
typedef struct fsc_dictionary fsc_dictionary;

typedef struct fsc_inference_config {
  double noise_scale;
  double sparsity_weight;
  double cauchy_scale;
  double grad_tol;
  size_t max_evals;
} fsc_inference_config;

typedef struct fsc_train_config {
  size_t minibatch_size;
  double learning_rate;
  double baseline_learning_rate;
  size_t epochs;
  size_t min_steps; /* extra epochs run until this many updates */
  uint64_t seed;
  size_t threads; /* 0: one per core */
  size_t filter_side; /* 0: same as the data */
  fsc_inference_config inference;
} fsc_train_config;

typedef struct fsc_interval {
  double lo;
  double hi;
} fsc_interval;

typedef struct fsc_transform_prior {
  fsc_interval alpha;
  fsc_interval beta;
  fsc_interval theta;
  fsc_interval delta;
  fsc_interval eta;
  uint64_t seed;
} fsc_transform_prior;

typedef struct fsc_dictionary_info {
  fsc_model_kind kind;
  size_t m;
  size_t side;
  size_t filter_side; /* 0 for baseline dictionaries */
  double data_scale;
  size_t train_size; /* patches it was trained on */
  uint64_t seed;     /* training seed */
} fsc_dictionary_info;

typedef struct fsc_train_step {
  size_t step;
  double mean_objective;
  double mean_rmse;
  double update_norm;
} fsc_train_step;

/* Called after every minibatch update; may be NULL. */
typedef void (*fsc_train_callback)(const fsc_train_step* step, void* user);

/* ---- errors and defaults -------------------------------------------- */

FSC_API const char* fsc_status_string(fsc_status status);
FSC_API const char* fsc_last_error(void);
FSC_API const char* fsc_version(void);
/* One of "trace", "debug", "info", "warn", "error", "off". */
FSC_API fsc_status fsc_set_log_level(const char* level);

FSC_API void fsc_inference_config_default(fsc_inference_config* cfg);
FSC_API void fsc_train_config_default(fsc_train_config* cfg);
/* Default ranges, translations scaled to a patch of `side` pixels. */
FSC_API void fsc_transform_prior_default(fsc_transform_prior* prior, size_t side);

/* ---- datasets ------------------------------------------------------- */

/* Loads `count` raw grayscale patches starting at `offset` from a dataset URI
 * (cifar:<dir-or-file> or synth:<spec-file>); split is "train" or "test". */
FSC_API fsc_status fsc_dataset_load(const char* uri, const char* split, size_t count, size_t offset,
                                    fsc_dataset** out);
/* Copies count*side*side row-major values into a new raw dataset. */
FSC_API fsc_status fsc_dataset_from_values(size_t side, size_t count, const double* values, fsc_dataset** out);
/* Whitens every patch in place. If *scale <= 0 the unit-variance scale is
 * fitted on this dataset and written back; otherwise *scale is applied. */
FSC_API fsc_status fsc_dataset_whiten(fsc_dataset* ds, double* scale, size_t threads);
/* New dataset holding patches [offset, offset+count) of `ds`, in the same
 * whitening state. */
FSC_API fsc_status fsc_dataset_subset(const fsc_dataset* ds, size_t offset, size_t count, fsc_dataset** out);
FSC_API size_t fsc_dataset_size(const fsc_dataset* ds);
FSC_API size_t fsc_dataset_side(const fsc_dataset* ds);
/* Copies patch `index` (side*side values) into `out`. */
FSC_API fsc_status fsc_dataset_patch(const fsc_dataset* ds, size_t index, double* out);
FSC_API void fsc_dataset_free(fsc_dataset* ds);

/* ---- training ------------------------------------------------------- */

/* The dataset must already be whitened; its whitening scale is recorded in
 * the dictionary. */
FSC_API fsc_status fsc_train_factored(const fsc_dataset* train, const fsc_transform_prior* prior, size_t m,
                                      const fsc_train_config* cfg, fsc_train_callback callback, void* user,
                                      fsc_dictionary** out);
FSC_API fsc_status fsc_train_baseline(const fsc_dataset* train, size_t m, const fsc_train_config* cfg,
                                      fsc_train_callback callback, void* user, fsc_dictionary** out);

/* ---- dictionaries --------------------------------------------------- */

FSC_API fsc_status fsc_dictionary_load(const char* path, fsc_dictionary** out);
FSC_API fsc_status fsc_dictionary_save(const fsc_dictionary* dict, const char* path, int include_basis);
FSC_API fsc_status fsc_dictionary_get_info(const fsc_dictionary* dict, fsc_dictionary_info* info);
/* m*side*side values, one atom per row. */
FSC_API fsc_status fsc_dictionary_basis(const fsc_dictionary* dict, double* out);
/* filter_side*filter_side values; FSC_ERR_INVALID_ARGUMENT for baseline. */
FSC_API fsc_status fsc_dictionary_filter(const fsc_dictionary* dict, double* out);
FSC_API void fsc_dictionary_free(fsc_dictionary* dict);

/* ---- coding and evaluation ------------------------------------------ */

/* Infers the full code of every patch (row-major n x m into `codes`), then
 * keeps the k largest magnitudes when 1 <= k <= m (k == 0 keeps all). */
FSC_API fsc_status fsc_encode(const fsc_dictionary* dict, const fsc_dataset* ds, const fsc_inference_config* cfg,
                              size_t k, size_t threads, double* codes);
/* Indices of the k largest |code[i]| (1 <= k <= m), largest first; ties go
 * to the lower index. */
FSC_API fsc_status fsc_top_k_indices(const double* code, size_t m, size_t k, size_t* indices);
/* W^T code for one m-vector, written as side*side values. */
FSC_API fsc_status fsc_reconstruct(const fsc_dictionary* dict, const double* code, double* out);
/* Mean top-K RMSE over the dataset for each of the n_ks strictly increasing
 * values in `ks`. */
FSC_API fsc_status fsc_rmse_curve(const fsc_dictionary* dict, const fsc_dataset* test, const size_t* ks, size_t n_ks,
                                  const fsc_inference_config* cfg, size_t threads, double* mean_rmse);
/* Full-code RMSE of factored and baseline models trained on each prefix
 * size of `train`; out has 2*n_sizes entries, factored first. */
FSC_API fsc_status fsc_data_efficiency_sweep(const fsc_dataset* train, const fsc_dataset* test,
                                             const size_t* train_sizes, size_t n_sizes, size_t m,
                                             const fsc_transform_prior* prior, const fsc_train_config* cfg,
                                             double* full_code_rmse);

/* ---- export --------------------------------------------------------- */

/* P5 PGM of one side*side patch, min-max scaled. */
FSC_API fsc_status fsc_write_pgm(const char* path, size_t side, const double* values);
/* Grid of `count` patches of the same side, `columns` per row. */
FSC_API fsc_status fsc_write_pgm_grid(const char* path, size_t side, size_t count, const double* values,
                                      size_t columns);

#ifdef __cplusplus
}
#endif

#endif /* FSC_FSC_H */
