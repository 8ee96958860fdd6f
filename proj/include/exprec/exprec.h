/* C interface to the exprec library. All functions return an exprec_status;
 * on failure exprec_last_error() describes the most recent error on the
 * calling thread. Handles are opaque and must be released with the matching
 * *_free function. */
#ifndef EXPREC_H
#define EXPREC_H

#include <stddef.h>
#include <stdint.h>

#if defined(EXPREC_BUILDING_LIBRARY)
#define EXPREC_API __attribute__((visibility("default")))
#else
#define EXPREC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum exprec_status {
  EXPREC_OK = 0,
  EXPREC_E_INVALID_ARGUMENT = 1,
  EXPREC_E_SHAPE_MISMATCH = 2,
  EXPREC_E_NON_FINITE = 3,
  EXPREC_E_BAD_MAGIC = 4,
  EXPREC_E_TRUNCATED = 5,
  EXPREC_E_PAYLOAD_SIZE = 6,
  EXPREC_E_IO = 7,
  EXPREC_E_CONFIG = 8,
  EXPREC_E_EIGEN_FAILURE = 9,
  EXPREC_E_NOT_PSD = 10,
  EXPREC_E_CG_DIVERGENCE = 11,
  EXPREC_E_SIZE_GUARD = 12,
  EXPREC_E_INTERNAL = 13,
  EXPREC_E_OUT_OF_MEMORY = 14
} exprec_status;

typedef struct exprec_experiment exprec_experiment;
typedef struct exprec_array exprec_array;

typedef struct exprec_recon_info {
  int converged;
  int iterations;
  double seconds;
} exprec_recon_info;

typedef struct exprec_metrics {
  char label[32];
  double snr_db;
  double nrmse;
  double t2_mae_ms;
  double wall_seconds;
} exprec_metrics;

EXPREC_API const char* exprec_version(void);
EXPREC_API const char* exprec_status_string(exprec_status status);
EXPREC_API const char* exprec_last_error(void);

/* Worker threads for the parallel kernels (>= 1). */
EXPREC_API exprec_status exprec_set_threads(int n);

/* Opens an experiment from a config file or JSON text. out_dir and seed may be
 * NULL to keep the values from the config. */
EXPREC_API exprec_status exprec_experiment_open(const char* config_path, const char* out_dir, const uint64_t* seed,
                                                exprec_experiment** out);
EXPREC_API exprec_status exprec_experiment_open_json(const char* json_text, const char* out_dir,
                                                     const uint64_t* seed, exprec_experiment** out);
EXPREC_API void exprec_experiment_free(exprec_experiment* exp);

/* Hex SHA-256 of the canonical config; buf needs at least 65 bytes. */
EXPREC_API exprec_status exprec_experiment_hash(const exprec_experiment* exp, char* buf, size_t len);

EXPREC_API exprec_status exprec_phantom(exprec_experiment* exp);
EXPREC_API exprec_status exprec_mask(exprec_experiment* exp);
EXPREC_API exprec_status exprec_simulate(exprec_experiment* exp);
/* method: "proposed", "ktlr" or "zerofill". info may be NULL. */
EXPREC_API exprec_status exprec_recon(exprec_experiment* exp, const char* method, exprec_recon_info* info);
EXPREC_API exprec_status exprec_fit(exprec_experiment* exp);
/* Writes metrics.csv; copies up to `capacity` rows into `rows` (may be NULL)
 * and the total row count into *count (may be NULL). */
EXPREC_API exprec_status exprec_eval(exprec_experiment* exp, exprec_metrics* rows, size_t capacity, size_t* count);
EXPREC_API exprec_status exprec_render(exprec_experiment* exp);

/* KTAR files. */
EXPREC_API exprec_status exprec_array_read(const char* path, exprec_array** out);
EXPREC_API void exprec_array_free(exprec_array* a);
EXPREC_API const char* exprec_array_dtype(const exprec_array* a);
EXPREC_API size_t exprec_array_ndim(const exprec_array* a);
/* Copies min(ndim, capacity) dimensions. */
EXPREC_API exprec_status exprec_array_shape(const exprec_array* a, uint64_t* dims, size_t capacity);
/* NULL when the file carries no config hash. */
EXPREC_API const char* exprec_array_config_hash(const exprec_array* a);

#ifdef __cplusplus
}
#endif

#endif
