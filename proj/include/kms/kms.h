/* C interface to the kernel max-sliced Wasserstein library.
 *
 * Every call returns a kms_status. On failure kms_last_error() holds a
 * message for the calling thread until its next failing call. Strings
 * returned through char** are owned by the caller and released with
 * kms_string_free. Handles are released with their matching _free call;
 * passing NULL to any _free is a no-op.
 */
#ifndef KMS_KMS_H
#define KMS_KMS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define KMS_API __declspec(dllexport)
#else
#define KMS_API __attribute__((visibility("default")))
#endif

typedef enum kms_status {
  KMS_OK = 0,
  KMS_E_USAGE = 1,     /* bad argument or configuration */
  KMS_E_PARSE = 2,     /* input could not be parsed */
  KMS_E_NUMERICAL = 3, /* numerical precondition failed */
  KMS_E_SOLVER = 4,    /* solver failure */
  KMS_E_INTERNAL = 5
} kms_status;

typedef struct kms_cloud kms_cloud;
typedef struct kms_result kms_result;

KMS_API const char* kms_version(void);
KMS_API const char* kms_last_error(void);
KMS_API void kms_string_free(char* s);

/* Point clouds: one sample per row. Files ending in .bin use the binary
 * layout (u64 rows, u64 cols, row-major f64), anything else is CSV. */
KMS_API kms_status kms_cloud_load(const char* path, kms_cloud** out);
KMS_API kms_status kms_cloud_from_rows(const double* data, size_t rows, size_t cols, kms_cloud** out);
KMS_API size_t kms_cloud_rows(const kms_cloud* c);
KMS_API size_t kms_cloud_cols(const kms_cloud* c);
KMS_API void kms_cloud_free(kms_cloud* c);

typedef struct kms_solver_options {
  const char* kernel;     /* "gaussian" or "dot_product" */
  double bandwidth;       /* <= 0: median heuristic */
  const char* convention; /* "half" or "unit" */
  double relative_delta;  /* accuracy as a fraction of the largest pair cost */
  long max_iterations;    /* mirror-ascent cap, 0 = theorem horizon */
  uint64_t seed;
} kms_solver_options;

KMS_API void kms_solver_options_init(kms_solver_options* o);

KMS_API kms_status kms_distance(const kms_cloud* x, const kms_cloud* y, const kms_solver_options* o,
                                kms_result** out);
KMS_API double kms_result_distance(const kms_result* r);
KMS_API double kms_result_value(const kms_result* r);
KMS_API double kms_result_sdr_value(const kms_result* r);
KMS_API size_t kms_result_rank(const kms_result* r);
KMS_API kms_status kms_result_json(const kms_result* r, int with_timings, char** out);
KMS_API kms_status kms_result_projector_csv(const kms_result* r, char** out);
KMS_API kms_status kms_result_trace_csv(const kms_result* r, char** out);
/* Projector values f(z) for every row of z. values must hold rows(z) entries. */
KMS_API kms_status kms_result_project(const kms_result* r, const kms_cloud* z, double* values);
KMS_API void kms_result_free(kms_result* r);

typedef struct kms_test_options {
  kms_solver_options solver;
  double alpha;
  int permutations;
  const char* mode; /* "bootstrap" or "theorem" */
  double p;         /* theorem mode only */
  double c_univ;    /* theorem mode only */
} kms_test_options;

KMS_API void kms_test_options_init(kms_test_options* o);
KMS_API kms_status kms_test(const kms_cloud* x, const kms_cloud* y, const kms_test_options* o, char** json_out);

typedef struct kms_rankcheck_options {
  const size_t* n_list;
  size_t n_count;
  const char* dataset;
  int trials;
  uint64_t seed;
  int threads;
  double relative_delta;
  long max_iterations;
} kms_rankcheck_options;

KMS_API void kms_rankcheck_options_init(kms_rankcheck_options* o);
/* CSV with header n,trial,before,after,bound. */
KMS_API kms_status kms_rankcheck(const kms_rankcheck_options* o, char** csv_out);

typedef struct kms_sweep_options {
  const char* dataset;
  const size_t* sizes;
  size_t size_count;
  int trials;
  double p;
  const char* kernel;
  uint64_t seed;
  int threads;
  double relative_delta;
  long max_iterations;
} kms_sweep_options;

KMS_API void kms_sweep_options_init(kms_sweep_options* o);
KMS_API kms_status kms_sweep(const kms_sweep_options* o, char** csv_out, char** json_out);

/* Samples the dataset described by a JSON spec; both outputs are CSV. */
KMS_API kms_status kms_generate(const char* spec_json, char** x_csv, char** y_csv);

/* Guaranteed low-rank bound for n samples per cloud; 0 for n = 0. */
KMS_API size_t kms_rank_bound(size_t n);

#ifdef __cplusplus
}
#endif

#endif
