#ifndef EVIGRAPH_H
#define EVIGRAPH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum EvStatus {
  EvStatus_Ok = 0,
  EvStatus_NullArgument = 1,
  EvStatus_InvalidUtf8 = 2,
  EvStatus_Io = 3,
  EvStatus_Parse = 4,
  EvStatus_InvalidInput = 5,
  EvStatus_Runtime = 6,
} EvStatus;

// Opaque corpus-index handle.
typedef struct EvCorpus EvCorpus;

// Opaque property graph handle.
typedef struct EvGraph EvGraph;

// Opaque knowledge-base handle.
typedef struct EvKb EvKb;

// Opaque trained-model handle.
typedef struct EvModel EvModel;

// Training hyperparameters. `layers == 0` picks the graph diameter capped
// at 4; zeros elsewhere fall back to library defaults.
typedef struct EvTrainOptions {
  uint32_t layers;
  uint32_t hidden_dim;
  double learning_rate;
  uint32_t epochs;
  uint64_t seed;
} EvTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message for this thread, or null when the previous call
// succeeded. The pointer stays valid until the next failing call.
const char *ev_last_error_message(void);

// Library version as a static string.
const char *ev_version(void);

// Release a string allocated by this library.
//
// # Safety
// `s` must have been returned by an `ev_*` out-parameter and not yet freed.
void ev_string_free(char *s);

// Load a graph from nodes/edges TSV paths into a new handle.
//
// # Safety
// `nodes_path` and `edges_path` must be NUL-terminated strings; `out` must
// be a valid pointer.
enum EvStatus ev_graph_load(const char *nodes_path, const char *edges_path, struct EvGraph **out);

// # Safety
// `graph` must come from `ev_graph_load` and not be freed twice.
void ev_graph_free(struct EvGraph *graph);

// Node count; 0 for a null handle.
//
// # Safety
// `graph` must be a live handle or null.
size_t ev_graph_node_count(const struct EvGraph *graph);

// Edge count; 0 for a null handle.
//
// # Safety
// `graph` must be a live handle or null.
size_t ev_graph_edge_count(const struct EvGraph *graph);

// Train on the graph's own edges with sampled negatives.
//
// # Safety
// `graph` must be a live handle; `out` must be valid.
enum EvStatus ev_train(const struct EvGraph *graph,
                       struct EvTrainOptions options,
                       struct EvModel **out);

// # Safety
// `path` must be a NUL-terminated string; `model` a live handle.
enum EvStatus ev_model_save(const struct EvModel *model, const char *path);

// # Safety
// `path` must be a NUL-terminated string; `out` valid.
enum EvStatus ev_model_load(const char *path, struct EvModel **out);

// # Safety
// `model` must come from this library and not be freed twice.
void ev_model_free(struct EvModel *model);

// Link probability in (0,1) for two node ids.
//
// # Safety
// Handles must be live; id strings NUL-terminated; `score_out` valid.
enum EvStatus ev_score_link(const struct EvGraph *graph,
                            const struct EvModel *model,
                            const char *src_id,
                            const char *dst_id,
                            double *score_out);

// Build a corpus index from a JSONL file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` valid.
enum EvStatus ev_corpus_load(const char *path, struct EvCorpus **out);

// # Safety
// `corpus` must come from `ev_corpus_load` and not be freed twice.
void ev_corpus_free(struct EvCorpus *corpus);

// Parse an axiom file into a knowledge base.
//
// # Safety
// `path` must be a NUL-terminated string; `out` valid.
enum EvStatus ev_kb_load(const char *path, struct EvKb **out);

// # Safety
// `kb` must come from `ev_kb_load` and not be freed twice.
void ev_kb_free(struct EvKb *kb);

// Decide entailment of a ground goal like `Mortal(socrates)`. On
// entailment, `proof_json_out` (when non-null) receives the proof document.
//
// # Safety
// `kb` must be live; `goal` NUL-terminated; `entailed_out` valid;
// `proof_json_out` may be null.
enum EvStatus ev_kb_entails(const struct EvKb *kb,
                            const char *goal,
                            int32_t *entailed_out,
                            char **proof_json_out);

// Evaluate one predicted link through every available channel and return
// the report JSON. `corpus` and `kb` may be null to skip their channels;
// `config_toml` may be null for defaults.
//
// # Safety
// Handles must be live or null as documented; strings NUL-terminated;
// `report_json_out` valid.
enum EvStatus ev_evaluate(const struct EvGraph *graph,
                          const struct EvModel *model,
                          const struct EvCorpus *corpus,
                          const struct EvKb *kb,
                          const char *src_id,
                          const char *relation,
                          const char *dst_id,
                          const char *config_toml,
                          char **report_json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVIGRAPH_H */
