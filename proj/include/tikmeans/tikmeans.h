#ifndef TIKMEANS_TIKMEANS_H
#define TIKMEANS_TIKMEANS_H

#include <stddef.h>
#include <stdint.h>

#if defined(TIKMEANS_BUILDING)
#define TIK_API __attribute__((visibility("default")))
#else
#define TIK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tik_status {
    TIK_OK = 0,
    TIK_ERR_USAGE = 1,
    TIK_ERR_DOMAIN = 2,
    TIK_ERR_RANGE = 3,
    TIK_ERR_IO = 4,
    TIK_ERR_PARSE = 5,
    TIK_ERR_INTERNAL = 6
} tik_status;

typedef enum tik_lambda_mode {
    TIK_MODE_NONE = 0,
    TIK_MODE_SHARED = 1,
    TIK_MODE_PER_CLUSTER = 2
} tik_lambda_mode;

typedef enum tik_step_type {
    TIK_STEP_ONE = 0,
    TIK_STEP_PER_DIMENSION = 1,
    TIK_STEP_PER_DIMENSION_PER_CLUSTER = 2
} tik_step_type;

typedef struct tik_dataset tik_dataset;
typedef struct tik_model tik_model;
typedef struct tik_jump_profile tik_jump_profile;

typedef struct tik_config {
    int k;
    tik_lambda_mode lambda_mode;
    tik_step_type step_type;
    int n_starts;         /* starts of the requested mode */
    int n_starts_shared;  /* shared warm-start stage of per-cluster fits */
    int max_iter;
    uint64_t seed;
    int threads;          /* 0: hardware concurrency; never changes results */
    const double* grid;   /* NULL: default grid */
    size_t grid_len;
} tik_config;

/* Message of the last failure on the calling thread. Never NULL. */
TIK_API const char* tik_last_error(void);
TIK_API const char* tik_version(void);
/* Frees strings returned through char** out-parameters. */
TIK_API void tik_string_free(char* s);

/* Datasets */
TIK_API tik_status tik_dataset_load_csv(const char* path, const char* label_column, tik_dataset** out);
TIK_API tik_status tik_dataset_from_matrix(const double* data, size_t n, size_t p, tik_dataset** out);
TIK_API tik_status tik_dataset_simulate_preset(const char* name, uint64_t seed, tik_dataset** out);
/* latent_means is k x p row-major, lambda_true has p entries. */
TIK_API tik_status tik_dataset_simulate(const size_t* n_per_cluster, size_t k, const double* latent_means, size_t p,
                                        double latent_sd, const double* lambda_true, uint64_t seed,
                                        tik_dataset** out);
TIK_API void tik_dataset_free(tik_dataset* d);
TIK_API size_t tik_dataset_rows(const tik_dataset* d);
TIK_API size_t tik_dataset_cols(const tik_dataset* d);
TIK_API int tik_dataset_has_labels(const tik_dataset* d);
/* n*p row-major values. */
TIK_API tik_status tik_dataset_values(const tik_dataset* d, double* out, size_t len);
/* Borrowed pointers valid until the dataset is modified or freed. */
TIK_API const char* tik_dataset_feature_name(const tik_dataset* d, size_t j);
TIK_API const char* tik_dataset_label(const tik_dataset* d, size_t i);
/* In-place preprocessing. factors/offsets may be NULL, else hold p values.
   margin < 0 selects the per-column default. */
TIK_API tik_status tik_dataset_rms_scale(tik_dataset* d, double* factors);
TIK_API tik_status tik_dataset_shift_positive(tik_dataset* d, double margin, double* offsets);
/* Columnwise ihs (or its inverse) with one lambda per column. */
TIK_API tik_status tik_dataset_transform(tik_dataset* d, const double* lambda, size_t p, int inverse);
/* Per-cluster variant: lambda is k x p, labels are 1-based, one per row. */
TIK_API tik_status tik_dataset_transform_partitioned(tik_dataset* d, const double* lambda, size_t k, size_t p,
                                                     const int* labels, size_t n, int inverse);
TIK_API tik_status tik_dataset_to_csv(const tik_dataset* d, const char* label_header, char** out);

/* Fitting */
TIK_API void tik_config_default(tik_config* c);
/* Per-cluster mode runs a shared fit first and warm-starts from it. */
TIK_API tik_status tik_fit(const tik_dataset* d, const tik_config* c, tik_model** out);
TIK_API void tik_model_free(tik_model* m);
TIK_API int tik_model_k(const tik_model* m);
TIK_API size_t tik_model_rows(const tik_model* m);
TIK_API size_t tik_model_cols(const tik_model* m);
/* 1-based cluster labels, n entries. */
TIK_API tik_status tik_model_labels(const tik_model* m, int* out, size_t n);
/* k x p centers; original_space selects back-transformed centers. */
TIK_API tik_status tik_model_centers(const tik_model* m, int original_space, double* out, size_t len);
/* 1 row in shared/none mode, k rows in per-cluster mode. */
TIK_API size_t tik_model_lambda_rows(const tik_model* m);
TIK_API tik_status tik_model_lambda(const tik_model* m, double* out, size_t len);
TIK_API double tik_model_objective(const tik_model* m);
TIK_API double tik_model_wss(const tik_model* m);
TIK_API int tik_model_iterations(const tik_model* m);
TIK_API int tik_model_converged(const tik_model* m);
TIK_API int tik_model_cycle_detected(const tik_model* m);
TIK_API int tik_model_degenerate(const tik_model* m);
TIK_API uint64_t tik_model_seed(const tik_model* m);
TIK_API int tik_model_start_index(const tik_model* m);
TIK_API size_t tik_model_trace_length(const tik_model* m);
/* repaired may be NULL. */
TIK_API tik_status tik_model_trace(const tik_model* m, double* objective, int* repaired, size_t len);

/* Evaluation */
TIK_API tik_status tik_ari(const int* a, const int* b, size_t n, double* out);
/* Against the dataset's label column. */
TIK_API tik_status tik_model_ari(const tik_model* m, const tik_dataset* d, double* out);
TIK_API tik_status tik_model_confusion(const tik_model* m, const tik_dataset* d, int csv, char** out);

/* Model selection */
TIK_API int tik_kmax_default(int k_true_hint); /* hint <= 0: none */
/* Copies min(cap, 400) values; *len receives the full count. */
TIK_API tik_status tik_default_eta_grid(double* out, size_t cap, size_t* len);
/* etas == NULL selects the default grid. */
TIK_API tik_status tik_jump_select(const tik_dataset* d, int kmax, const double* etas, size_t n_etas,
                                   const tik_config* c, tik_jump_profile** out);
TIK_API void tik_jump_profile_free(tik_jump_profile* j);
TIK_API int tik_jump_selected_k(const tik_jump_profile* j);
TIK_API int tik_jump_fallback(const tik_jump_profile* j);
TIK_API int tik_jump_kmax(const tik_jump_profile* j);
TIK_API int tik_jump_longest_run_k(const tik_jump_profile* j);
TIK_API size_t tik_jump_longest_run_length(const tik_jump_profile* j);
/* kmax values, distortion for K = 1..kmax. */
TIK_API tik_status tik_jump_distortions(const tik_jump_profile* j, double* out, size_t len);
TIK_API tik_status tik_jump_table_csv(const tik_jump_profile* j, char** out);
TIK_API tik_status tik_jump_distortions_csv(const tik_jump_profile* j, char** out);
TIK_API tik_status tik_jump_svg(const tik_jump_profile* j, char** out);

/* Scalars and grids */
TIK_API tik_status tik_ihs_forward(double x, double lambda, double* out);
TIK_API tik_status tik_ihs_inverse(double y, double lambda, double* out);
/* Copies min(cap, size) values; *len receives the full count. */
TIK_API tik_status tik_grid_parse(const char* spec, double* out, size_t cap, size_t* len);
TIK_API tik_status tik_grid_default(double* out, size_t cap, size_t* len);

#ifdef __cplusplus
}
#endif

#endif
