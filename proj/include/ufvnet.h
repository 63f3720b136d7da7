/* C interface to the ufvnet library: dataset construction, two-stage
 * training, evaluation and single-image inference for the unified
 * multi-anchor face super-resolution network.
 *
 * Conventions:
 *   - every operation takes a JSON option object and (optionally) returns a
 *     malloc'd JSON result; free returned strings with ufv_string_free().
 *   - status codes mirror the CLI exit codes: 0 ok, 1 runtime failure,
 *     2 invalid arguments. ufv_last_error() describes the last failure on
 *     the calling thread.
 */
#ifndef UFVNET_H
#define UFVNET_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ufv_status {
    UFV_OK = 0,
    UFV_ERROR = 1,
    UFV_INVALID_ARGUMENT = 2
} ufv_status;

const char* ufv_version(void);
const char* ufv_last_error(void);
void ufv_string_free(char* s);

/* Configuration. ufv_config_default returns the full default config JSON;
 * ufv_config_help returns the human-readable key table. */
ufv_status ufv_config_default(char** config_json);
ufv_status ufv_config_help(char** text);

/* Synthetic face corpus:
 *   {"out_dir":"...", "force":false, "config":{...}}  (corpus.count/size/seed) */
ufv_status ufv_make_corpus(const char* opts_json, char** result_json);

/* Multi-resolution dataset build:
 *   {"corpus":"...", "out_dir":"...", "split":"train|test", "force":false,
 *    "config":{...}}  (dataset.hr_size/anchors/preset/train_frac) */
ufv_status ufv_build_dataset(const char* opts_json, char** result_json);

/* Training stages:
 *   {"stage":"anchor|regressor|integrated", "manifest":"...", "out_dir":"...",
 *    "force":false, "anchor_index":0, "anchor_ckpts":[...],
 *    "regressor_ckpt":"...", "config":{...}} */
ufv_status ufv_train(const char* opts_json, char** result_json);

/* Evaluation:
 *   {"manifest":"...", "out_dir":"...", "force":false, "dataset_tag":"...",
 *    "methods":[{"label":"bicubic"},{"label":"model","ckpt":"..."}],
 *    "config":{...}} */
ufv_status ufv_evaluate(const char* opts_json, char** result_json);

/* Report merge:  {"inputs":["report.csv",...], "out":"merged.csv"} */
ufv_status ufv_report(const char* opts_json, char** result_json);

/* Artifact lint over a directory tree; result lists problems (empty = clean). */
ufv_status ufv_lint(const char* root_dir, char** result_json);

/* Inference handle over a trained checkpoint. */
typedef struct ufv_model ufv_model;

ufv_status ufv_model_open(const char* checkpoint_path, ufv_model** out);
void ufv_model_close(ufv_model* m);
ufv_status ufv_model_info(ufv_model* m, char** info_json);

/* Upscales the LR image file to the model's HR size, runs the test graph and
 * writes the SR PNG (clamped to [0,1]). weights_json receives the predicted
 * weight vector. */
ufv_status ufv_model_infer_file(ufv_model* m, const char* lr_image_path,
                                const char* sr_png_path, char** weights_json);

#ifdef __cplusplus
}
#endif

#endif /* UFVNET_H */
