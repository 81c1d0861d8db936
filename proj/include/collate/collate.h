#ifndef COLLATE_COLLATE_H
#define COLLATE_COLLATE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(COLLATE_BUILDING_LIBRARY)
#    define COLLATE_API __declspec(dllexport)
#  else
#    define COLLATE_API __declspec(dllimport)
#  endif
#else
#  define COLLATE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum collate_status {
  COLLATE_OK = 0,
  COLLATE_E_INVALID_ARGUMENT = 1,
  COLLATE_E_IO = 2,
  COLLATE_E_BAD_MAGIC = 3,
  COLLATE_E_VERSION_MISMATCH = 4,
  COLLATE_E_TRUNCATED = 5,
  COLLATE_E_NON_FINITE = 6,
  COLLATE_E_SHAPE_MISMATCH = 7,
  COLLATE_E_CHANNEL_MISMATCH = 8,
  COLLATE_E_DIMENSION_MISMATCH = 9,
  COLLATE_E_STAGE_ORDER = 10,
  COLLATE_E_OUT_OF_RANGE = 11,
  COLLATE_E_EMPTY = 12,
  COLLATE_E_PARSE = 13,
  COLLATE_E_CONFLICT = 14,
  COLLATE_E_INTERNAL = 15
} collate_status;

typedef struct collate_manuscript collate_manuscript;
typedef struct collate_matrix collate_matrix;
typedef struct collate_seeds collate_seeds;
typedef struct collate_correspondences collate_correspondences;
typedef struct collate_project collate_project;

/* Message of the last failed call on this thread; empty after a success. */
COLLATE_API const char* collate_last_error(void);
COLLATE_API const char* collate_status_name(collate_status status);
/* Frees strings returned through char** out-parameters. */
COLLATE_API void collate_string_free(char* text);
COLLATE_API const char* collate_version(void);

/* Feature store */
COLLATE_API collate_status collate_manuscript_load(const char* manifest_path, collate_manuscript** out);
COLLATE_API void collate_manuscript_free(collate_manuscript* manuscript);
COLLATE_API size_t collate_manuscript_size(const collate_manuscript* manuscript);
COLLATE_API const char* collate_manuscript_id(const collate_manuscript* manuscript);
COLLATE_API collate_status collate_manuscript_illustration_id(const collate_manuscript* manuscript,
                                                             size_t index, const char** out);
/* JSON summary of a manifest: id, count, channels, scale tags. */
COLLATE_API collate_status collate_features_check(const char* manifest_path, char** report_json);

/* Similarity engine */
typedef struct collate_similarity_options {
  const char* method; /* "features" | "matching" | "trans" */
  double sigma;
  int ransac_iterations;
  uint64_t seed;
  unsigned workers;
  const int* scale_tags; /* NULL keeps the default 18..22 */
  size_t n_scale_tags;
  int base_scale;
} collate_similarity_options;

COLLATE_API void collate_similarity_options_init(collate_similarity_options* options);
COLLATE_API collate_status collate_similarity_matrix(const collate_manuscript* a, const collate_manuscript* b,
                                                     const collate_similarity_options* options,
                                                     collate_matrix** out);

/* Matrices */
COLLATE_API collate_status collate_matrix_create(size_t rows, size_t cols, const double* values,
                                                 collate_matrix** out);
COLLATE_API collate_status collate_matrix_load(const char* header_path, collate_matrix** out);
COLLATE_API collate_status collate_matrix_save(const collate_matrix* matrix, const char* header_path);
COLLATE_API void collate_matrix_free(collate_matrix* matrix);
COLLATE_API size_t collate_matrix_rows(const collate_matrix* matrix);
COLLATE_API size_t collate_matrix_cols(const collate_matrix* matrix);
/* "raw" | "normalized" | "propagated" */
COLLATE_API const char* collate_matrix_provenance(const collate_matrix* matrix);
COLLATE_API collate_status collate_matrix_get(const collate_matrix* matrix, size_t i, size_t j, double* out);
/* Copies rows*cols row-major values into `out`. */
COLLATE_API collate_status collate_matrix_values(const collate_matrix* matrix, double* out, size_t capacity);

/* Matrix ops. lambda: pass NaN for the default of softmax kinds. */
COLLATE_API collate_status collate_normalize(const collate_matrix* matrix, const char* kind, const char* combine,
                                             double lambda, collate_matrix** out, char** warnings_json);

COLLATE_API collate_status collate_seeds_create(const size_t* pairs, size_t n_pairs, collate_seeds** out);
COLLATE_API collate_status collate_seeds_two_cycle(const collate_matrix* normalized, collate_seeds** out);
COLLATE_API collate_status collate_seeds_three_cycle(const collate_matrix* ab, const collate_matrix* bc,
                                                     const collate_matrix* ac, collate_seeds** out_ab,
                                                     collate_seeds** out_bc, collate_seeds** out_ac);
/* Reads a seed file ({"pairs": [[i, j], ...]}) or a correspondence file;
   for the latter, entries not marked rejected become seeds. */
COLLATE_API collate_status collate_seeds_load(const char* path, collate_seeds** out);
COLLATE_API collate_status collate_seeds_save(const collate_seeds* seeds, const char* path);
COLLATE_API void collate_seeds_free(collate_seeds* seeds);
COLLATE_API size_t collate_seeds_size(const collate_seeds* seeds);
COLLATE_API collate_status collate_seeds_get(const collate_seeds* seeds, size_t k, size_t* i, size_t* j);

COLLATE_API collate_status collate_propagate(const collate_matrix* normalized, const collate_seeds* seeds,
                                             double alpha, double sigma_p, collate_matrix** out);

/* Collation. algo: "argmax" (row direction) | "argmax_cols" | "greedy". */
COLLATE_API collate_status collate_match(const collate_matrix* matrix, const char* algo,
                                         collate_correspondences** out);
COLLATE_API collate_status collate_correspondences_load(const char* path, collate_correspondences** out);
/* format: "json" | "csv" */
COLLATE_API collate_status collate_correspondences_save(const collate_correspondences* set, const char* path,
                                                        const char* format);
COLLATE_API void collate_correspondences_free(collate_correspondences* set);
COLLATE_API size_t collate_correspondences_size(const collate_correspondences* set);
COLLATE_API collate_status collate_correspondences_get(const collate_correspondences* set, size_t k, size_t* i,
                                                       size_t* j, double* score);
COLLATE_API collate_status collate_correspondences_set_pair(collate_correspondences* set, const char* a,
                                                            const char* b);

/* metrics: comma list of acc, recall_n, recall_n_greedy, map_r, nn:K1,K2,...
   With a matrix every metric is available; with only predicted matches only
   acc is. Either report pointer may be NULL. */
COLLATE_API collate_status collate_evaluate(const collate_matrix* matrix, const collate_correspondences* predicted,
                                            const collate_correspondences* ground_truth, const char* metrics,
                                            const char* label, char** report_json, char** report_text);

/* Projects */
COLLATE_API collate_status collate_project_create(const char* dir, const char* project_id,
                                                  const char* const* manifests, size_t n_manifests,
                                                  const char* config_json, collate_project** out);
COLLATE_API collate_status collate_project_open(const char* dir, collate_project** out);
COLLATE_API void collate_project_free(collate_project* project);
COLLATE_API uint64_t collate_project_revision(const collate_project* project);
/* stages: comma list of similarity, normalize, propagate, match; NULL or "" runs all. */
COLLATE_API collate_status collate_project_run(collate_project* project, const char* a, const char* b,
                                               const char* stages, char** summary_json);
COLLATE_API collate_status collate_project_confirm(collate_project* project, const char* a, const char* b,
                                                   size_t i, size_t j);
COLLATE_API collate_status collate_project_reject(collate_project* project, const char* a, const char* b,
                                                  size_t i, size_t j);
COLLATE_API collate_status collate_project_candidates(const collate_project* project, const char* a,
                                                      const char* b, size_t i, size_t k, int mask_rejected,
                                                      char** candidates_json);
COLLATE_API collate_status collate_project_status(const collate_project* project, const char* a, const char* b,
                                                  char** status_json);
COLLATE_API collate_status collate_project_export(const collate_project* project, const char* a, const char* b,
                                                  const char* format, const char* path);
COLLATE_API collate_status collate_project_set_image(collate_project* project, const char* illustration_id,
                                                     const char* full_path, const char* thumbnail_path);

/* Blocks serving the HTTP API until the process is stopped. port 0 picks a
   free port, reported through `on_bound` if given. */
COLLATE_API collate_status collate_serve(const char* project_dir, const char* host, int port,
                                         void (*on_bound)(int port, void* user), void* user);

/* Synthetic manuscript pair. options_json keys: seed, n, channels,
   style_noise, hub_strength, max_shift, scale_tags, fixed_side,
   texture_side. Writes <out_dir>/A/manifest.json, <out_dir>/B/manifest.json
   and <out_dir>/truth.json. */
COLLATE_API collate_status collate_synth_write(const char* options_json, const char* out_dir, char** info_json);

#ifdef __cplusplus
}
#endif

#endif
