/*
 * C API for the context-aware sentence classifier library.
 *
 * All functions return CLCNN_OK (0) on success or a nonzero error code;
 * clcnn_last_error() holds a human-readable message for the calling
 * thread's most recent failure. Objects are created behind opaque handles
 * and released with the matching *_free function.
 */
#ifndef CLCNN_H
#define CLCNN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  CLCNN_OK = 0,
  CLCNN_ERROR = 1,          /* runtime failure, see clcnn_last_error() */
  CLCNN_BAD_ARGUMENT = 2    /* null handle or out-of-range argument */
};

const char* clcnn_version(void);

/* Message describing this thread's most recent failure, empty if none. */
const char* clcnn_last_error(void);

/*
 * Runs one top-level command ("synth", "embed", "train", "cv", "sweep",
 * "predict") with a JSON run spec; see README for the spec schema. Outputs
 * and a reproducibility manifest are written to the paths named in the
 * spec; partial outputs are removed on failure.
 */
int clcnn_run_command(const char* command, const char* spec_json);

/* ---- corpus handles ---- */

typedef struct clcnn_corpus clcnn_corpus;

int clcnn_corpus_open(const char* path, clcnn_corpus** out);
void clcnn_corpus_free(clcnn_corpus* corpus);
int clcnn_corpus_num_documents(const clcnn_corpus* corpus, size_t* out);
int clcnn_corpus_num_labels(const clcnn_corpus* corpus, size_t* out);
int clcnn_corpus_label_name(const clcnn_corpus* corpus, size_t index,
                            const char** out);
/* Number of labeled instances under a context regime ("adjacent" or
 * "speaker"). */
int clcnn_corpus_num_instances(const clcnn_corpus* corpus, const char* regime,
                               size_t* out);

/* ---- embedding table handles ---- */

typedef struct clcnn_embeddings clcnn_embeddings;

int clcnn_embeddings_open(const char* path, clcnn_embeddings** out);
void clcnn_embeddings_free(clcnn_embeddings* table);
int clcnn_embeddings_dim(const clcnn_embeddings* table, size_t* out);
int clcnn_embeddings_vocab_size(const clcnn_embeddings* table, size_t* out);
/* Writes the vector for `token` (known or OOV) into `out[0..dim)`. */
int clcnn_embeddings_lookup(const clcnn_embeddings* table, const char* token,
                            double* out, size_t out_len);

/* ---- model handles ---- */

typedef struct clcnn_model clcnn_model;

int clcnn_model_open(const char* checkpoint_path, clcnn_model** out);
void clcnn_model_free(clcnn_model* model);
int clcnn_model_variant(const clcnn_model* model, const char** out);
int clcnn_model_num_classes(const clcnn_model* model, size_t* out);
int clcnn_model_label_name(const clcnn_model* model, size_t index,
                           const char** out);

/*
 * Classifies one instance given as JSON:
 *   {"focus": ["tok", ...],
 *    "left":  [["tok", ...], ...],   // adjacent sentence LAST
 *    "right": [["tok", ...], ...]}   // adjacent sentence FIRST
 * Writes class probabilities into probs[0..num_classes) and the predicted
 * class index into *predicted.
 */
int clcnn_model_predict(const clcnn_model* model, const char* instance_json,
                        double* probs, size_t probs_len, size_t* predicted);

#ifdef __cplusplus
}
#endif

#endif /* CLCNN_H */
