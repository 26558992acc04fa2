/*
 * Copyright 2026 The repalign Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the repalign core. Every call returns a status code; the
 * message for the last failure on the calling thread is available from
 * repalign_last_error(). Handles are opaque and owned by the caller. */

#ifndef REPALIGN_REPALIGN_H_
#define REPALIGN_REPALIGN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(REPALIGN_BUILDING)
#define REPALIGN_API __attribute__((visibility("default")))
#else
#define REPALIGN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum repalign_status {
  REPALIGN_OK = 0,
  REPALIGN_INTERNAL = 1,
  REPALIGN_ARGUMENT = 2, /* bad parameter or precondition */
  REPALIGN_DATA = 3,     /* malformed, truncated, non-finite or misaligned input */
  REPALIGN_NUMERIC = 4   /* solver failure */
} repalign_status;

typedef struct repalign_acts repalign_acts;
typedef struct repalign_matrix repalign_matrix;
typedef struct repalign_assignment repalign_assignment;
typedef struct repalign_mapping repalign_mapping;
typedef struct repalign_tree repalign_tree;
typedef struct repalign_clustering repalign_clustering;

REPALIGN_API const char* repalign_last_error(void);
REPALIGN_API const char* repalign_version(void);

/* Activations (samples x units). Buffers are sample-major. */
REPALIGN_API repalign_status repalign_acts_load(const char* path, repalign_acts** out);
REPALIGN_API repalign_status repalign_acts_from_buffer(const char* layer, const char* net, size_t samples,
                                                       size_t units, const float* data, repalign_acts** out);
REPALIGN_API repalign_status repalign_acts_save(const repalign_acts* acts, const char* path);
REPALIGN_API repalign_status repalign_acts_subsample(const repalign_acts* acts, size_t n, uint64_t seed,
                                                     repalign_acts** out);
REPALIGN_API size_t repalign_acts_samples(const repalign_acts* acts);
REPALIGN_API size_t repalign_acts_units(const repalign_acts* acts);
REPALIGN_API const char* repalign_acts_net(const repalign_acts* acts);
REPALIGN_API const char* repalign_acts_layer(const repalign_acts* acts);
/* Copies samples*units floats, sample-major. */
REPALIGN_API repalign_status repalign_acts_copy(const repalign_acts* acts, float* out, size_t capacity);
REPALIGN_API void repalign_acts_free(repalign_acts* acts);

/* Dense double matrices, row-major in buffers. */
REPALIGN_API repalign_status repalign_matrix_create(size_t rows, size_t cols, const double* data,
                                                    repalign_matrix** out);
REPALIGN_API size_t repalign_matrix_rows(const repalign_matrix* m);
REPALIGN_API size_t repalign_matrix_cols(const repalign_matrix* m);
REPALIGN_API double repalign_matrix_get(const repalign_matrix* m, size_t row, size_t col);
REPALIGN_API repalign_status repalign_matrix_copy(const repalign_matrix* m, double* out, size_t capacity);
/* Writes CSV when path ends in .csv, else the binary layout. */
REPALIGN_API repalign_status repalign_matrix_save(const repalign_matrix* m, const char* path,
                                                  const char* row_net, const char* col_net);
REPALIGN_API repalign_status repalign_matrix_load(const char* path, repalign_matrix** out);
REPALIGN_API void repalign_matrix_free(repalign_matrix* m);

/* Statistics and similarity. mean/std need room for units doubles. */
REPALIGN_API repalign_status repalign_layer_stats(const repalign_acts* acts, double* mean, double* std,
                                                  size_t* dead_count);
REPALIGN_API repalign_status repalign_corr_within(const repalign_acts* acts, unsigned workers,
                                                  repalign_matrix** out);
REPALIGN_API repalign_status repalign_corr_between(const repalign_acts* a, const repalign_acts* b,
                                                   unsigned workers, repalign_matrix** out);
/* MI in nats over `samples` rows drawn with `seed` (0 samples = 60000). */
REPALIGN_API repalign_status repalign_mi_between(const repalign_acts* a, const repalign_acts* b, size_t samples,
                                                 uint64_t seed, unsigned workers, repalign_matrix** out);

/* Matching. */
REPALIGN_API repalign_status repalign_semi_match(const repalign_matrix* sim, repalign_assignment** out);
REPALIGN_API repalign_status repalign_match(const repalign_matrix* sim, repalign_assignment** out);
REPALIGN_API size_t repalign_assignment_size(const repalign_assignment* a);
REPALIGN_API size_t repalign_assignment_col(const repalign_assignment* a, size_t row);
REPALIGN_API double repalign_assignment_score(const repalign_assignment* a, size_t row);
REPALIGN_API double repalign_assignment_mean(const repalign_assignment* a);
REPALIGN_API repalign_status repalign_apply_permutation(const repalign_matrix* sim, const repalign_assignment* full,
                                                        repalign_matrix** out);
REPALIGN_API repalign_status repalign_unmatched_fraction(const repalign_matrix* sim, double threshold,
                                                        double* out);
REPALIGN_API void repalign_assignment_free(repalign_assignment* a);

/* Sparse linear mapping target ~ source * W^T on normalized activations. */
REPALIGN_API repalign_status repalign_fit_mapping(const repalign_acts* source, const repalign_acts* target,
                                                  double decay, double tol, size_t max_iter,
                                                  repalign_mapping** out);
REPALIGN_API double repalign_mapping_loss(const repalign_mapping* m);
REPALIGN_API double repalign_mapping_nnz_per_target(const repalign_mapping* m);
REPALIGN_API double repalign_mapping_kkt_residual(const repalign_mapping* m);
REPALIGN_API int repalign_mapping_converged(const repalign_mapping* m);
REPALIGN_API repalign_status repalign_mapping_weights(const repalign_mapping* m, repalign_matrix** out);
REPALIGN_API void repalign_mapping_free(repalign_mapping* m);

/* Agglomerative clustering of the block matrix built from mapping weights. */
REPALIGN_API repalign_status repalign_hac(const repalign_matrix* weights, int keep_sign, repalign_tree** out);
REPALIGN_API size_t repalign_tree_merges(const repalign_tree* t);
/* Merge step k: child ids and weight. Leaves are 0..n-1, merged nodes n+k. */
REPALIGN_API repalign_status repalign_tree_merge(const repalign_tree* t, size_t step, size_t* left,
                                                 size_t* right, double* weight);
REPALIGN_API repalign_status repalign_tree_leaf_order(const repalign_tree* t, size_t* out, size_t capacity);
REPALIGN_API void repalign_tree_free(repalign_tree* t);

/* Spectral clustering of the combined two-net similarity. */
REPALIGN_API repalign_status repalign_spectral(const repalign_matrix* within_a, const repalign_matrix* within_b,
                                               const repalign_matrix* between, double tau, size_t k,
                                               uint64_t seed, repalign_clustering** out);
REPALIGN_API size_t repalign_clustering_size(const repalign_clustering* c);
REPALIGN_API size_t repalign_clustering_label(const repalign_clustering* c, size_t vertex);
REPALIGN_API double repalign_clustering_eigenvalue(const repalign_clustering* c, size_t index);
REPALIGN_API void repalign_clustering_free(repalign_clustering* c);
REPALIGN_API double repalign_adjusted_rand_index(const size_t* a, const size_t* b, size_t n);

/* k largest activations of one unit, descending. */
REPALIGN_API repalign_status repalign_top_activating(const repalign_acts* acts, size_t unit, size_t k,
                                                     size_t* samples, float* values);

/* Writes a synthetic pair (net_a, net_b) from a JSON fixture spec; the ground
 * truth JSON is returned in *truth_json (free with repalign_string_free). */
REPALIGN_API repalign_status repalign_generate_fixture(const char* spec_json, repalign_acts** net_a,
                                                       repalign_acts** net_b, char** truth_json);
REPALIGN_API void repalign_string_free(char* s);

/* Runs a CLI command with a JSON config; output files go to config.out_dir,
 * progress lines to stdout. *exit_code receives the command's status. */
REPALIGN_API repalign_status repalign_run(const char* command, const char* config_json, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif /* REPALIGN_REPALIGN_H_ */
