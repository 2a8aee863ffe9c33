/*
 * C interface to the ladder embedding library.
 *
 * Every handle is opaque and owned by the caller once returned; release it
 * with the matching *_free function. Functions return a ladder_status; on
 * failure ladder_last_error() describes the problem for the calling thread
 * until its next call into the library. Strings returned through `char**`
 * out-parameters are heap-allocated and released with ladder_string_free().
 *
 * Configurations cross the boundary as JSON text. Missing keys take their
 * defaults; unknown keys are rejected with LADDER_ERR_CONFIG.
 */
#ifndef LADDER_LADDER_H
#define LADDER_LADDER_H

#include <stddef.h>
#include <stdint.h>

#if defined(LADDER_BUILDING_LIBRARY)
#define LADDER_API __attribute__((visibility("default")))
#else
#define LADDER_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ladder_status {
  LADDER_OK = 0,
  LADDER_ERR_INVALID_ARGUMENT = 1,
  LADDER_ERR_CONFIG = 2,
  LADDER_ERR_INVALID_SPEC = 3,
  LADDER_ERR_IO = 4,
  LADDER_ERR_MANIFEST = 5,
  LADDER_ERR_SHAPE_MISMATCH = 6,
  LADDER_ERR_NON_FINITE_VALUE = 7,
  LADDER_ERR_NON_FINITE_LOSS = 8,
  LADDER_ERR_NO_KNOWN_TOKENS = 9,
  LADDER_ERR_MISSING_FINE_SCORE = 10,
  /* zero vectors, constant rank inputs, malformed partitions */
  LADDER_ERR_NUMERIC = 11,
  LADDER_ERR_OUT_OF_MEMORY = 12,
  LADDER_ERR_INTERNAL = 13
} ladder_status;

typedef enum ladder_split {
  LADDER_SPLIT_TRAIN = 0,
  LADDER_SPLIT_VALIDATION = 1,
  LADDER_SPLIT_TEST = 2
} ladder_split;

/* x2y: rows of the query modality retrieve candidates; y2x the reverse. */
typedef enum ladder_direction {
  LADDER_X2Y = 0,
  LADDER_Y2X = 1
} ladder_direction;

typedef struct ladder_dataset ladder_dataset;
typedef struct ladder_model ladder_model;
typedef struct ladder_train_log ladder_train_log;
typedef struct ladder_report ladder_report;

typedef struct ladder_audit_result {
  double max_relative_error;
  size_t probes;   /* accepted probes */
  size_t rejected; /* probes discarded because the perturbation crossed a hinge */
} ladder_audit_result;

LADDER_API const char* ladder_version(void);
LADDER_API const char* ladder_status_name(ladder_status status);
LADDER_API const char* ladder_last_error(void);
LADDER_API void ladder_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* Synthetic dataset from a JSON spec (keys: n, latent_dim, query_dim,
 * candidate_dim, noise, clusters, cluster_spread, n_validation, n_test,
 * tokens_per_text, seed). When `word_vectors_path` is non-NULL the word-vector
 * table matching the generated reference texts is written there. */
LADDER_API ladder_status ladder_dataset_generate(const char* spec_json, const char* word_vectors_path,
                                                 ladder_dataset** out);
LADDER_API ladder_status ladder_dataset_load(const char* dir, ladder_dataset** out);
LADDER_API ladder_status ladder_dataset_save(const ladder_dataset* dataset, const char* dir);
LADDER_API void ladder_dataset_free(ladder_dataset* dataset);

/* JSON summary: n, d_x, d_y, split sizes, has_relevance, relevance_scale, has_texts. */
LADDER_API ladder_status ladder_dataset_describe(const ladder_dataset* dataset, char** json_out);

/* Replaces the relevance matrix with bag-of-words scores over the dataset's
 * reference texts, refined by `fine_scores_path` (may be NULL) above
 * `fine_threshold`. With `fine_mandatory` non-zero a missing refinement is an
 * error. */
LADDER_API ladder_status ladder_dataset_build_relevance(ladder_dataset* dataset, const char* word_vectors_path,
                                                        const char* fine_scores_path, double fine_threshold,
                                                        int fine_mandatory);
LADDER_API ladder_status ladder_dataset_drop_relevance(ladder_dataset* dataset);

/* ---- models and training ---------------------------------------------- */

/* Train config keys: loss ("triplet-sum" | "triplet-hardest" | "ladder" |
 * "ladder-hc"), ladder {levels, thresholds, margins, weights}, batch_size,
 * epochs, embed_dim, lr {initial, decay_epoch, decayed},
 * adam {beta1, beta2, epsilon}, seed, validation_ks. */
LADDER_API ladder_status ladder_train(const ladder_dataset* dataset, const char* config_json,
                                      ladder_model** model_out, ladder_train_log** log_out);
/* Freshly initialized, untrained model. */
LADDER_API ladder_status ladder_model_init(const ladder_dataset* dataset, const char* config_json,
                                           ladder_model** out);
LADDER_API ladder_status ladder_model_save(const ladder_model* model, const char* dir);
LADDER_API ladder_status ladder_model_load(const char* dir, ladder_model** out);
LADDER_API ladder_status ladder_model_config(const ladder_model* model, char** json_out);
LADDER_API void ladder_model_free(ladder_model* model);

LADDER_API size_t ladder_train_log_epochs(const ladder_train_log* log);
LADDER_API ladder_status ladder_train_log_loss(const ladder_train_log* log, size_t epoch_index,
                                               double* train_loss, double* validation_loss);
/* Header line then one row per epoch: epoch, lr, train_loss, val_loss, then
 * per direction cs@K..., r1, r5, r10, mean_rank. Deterministic for a seed. */
LADDER_API ladder_status ladder_train_log_csv(const ladder_train_log* log, char** csv_out);
/* epoch,seconds rows. */
LADDER_API ladder_status ladder_train_log_timing_csv(const ladder_train_log* log, char** csv_out);
LADDER_API void ladder_train_log_free(ladder_train_log* log);

/* ---- evaluation -------------------------------------------------------- */

LADDER_API ladder_status ladder_evaluate(const ladder_model* model, const ladder_dataset* dataset,
                                         ladder_split split, const size_t* ks, size_t n_ks,
                                         ladder_report** out);
/* Evaluates caller-provided unit-norm embeddings (row-major n x dim) against a
 * row-major n x n relevance matrix. */
LADDER_API ladder_status ladder_evaluate_embeddings(const double* query, const double* candidate, size_t n,
                                                    size_t dim, const double* relevance, const size_t* ks,
                                                    size_t n_ks, ladder_report** out);
LADDER_API ladder_status ladder_report_text(const ladder_report* report, char** out);
LADDER_API ladder_status ladder_report_json(const ladder_report* report, char** out);
LADDER_API ladder_status ladder_report_parse_json(const char* json, ladder_report** out);
/* NaN when no query had a defined CS@K. */
LADDER_API ladder_status ladder_report_cs(const ladder_report* report, ladder_direction direction, size_t k,
                                          double* out);
/* k must be 1, 5 or 10. */
LADDER_API ladder_status ladder_report_recall(const ladder_report* report, ladder_direction direction, size_t k,
                                              double* out);
LADDER_API ladder_status ladder_report_mean_rank(const ladder_report* report, ladder_direction direction,
                                                 double* out);
LADDER_API void ladder_report_free(ladder_report* report);

/* ---- gradient audit ---------------------------------------------------- */

/* Central-difference check of the model's batch loss on the first training
 * batch. `batch_size` 0 uses the model's configured batch size.
 * `corrupt_scale` multiplies the analytic gradient (1.0 for a real audit). */
LADDER_API ladder_status ladder_gradcheck(const ladder_model* model, const ladder_dataset* dataset, size_t probes,
                                          double step, uint64_t seed, size_t batch_size, double corrupt_scale,
                                          ladder_audit_result* out);

#ifdef __cplusplus
}
#endif

#endif /* LADDER_LADDER_H */
