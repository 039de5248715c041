/* uavzone C API.
 *
 * Every call returns a status code; on failure uz_last_error() holds a
 * message for the calling thread. Strings returned through char** are heap
 * allocated and released with uz_string_free. Handles are opaque and released
 * with the matching *_free function (NULL is accepted).
 *
 * JSON option objects may be NULL or "" for defaults. Unknown keys are
 * rejected with UZ_ERR_CONFIG.
 */
#ifndef UAVZONE_H
#define UAVZONE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define UZ_API __declspec(dllexport)
#else
#define UZ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uz_status {
  UZ_OK = 0,
  UZ_ERR_INTERNAL = 1,
  UZ_ERR_CONFIG = 2,
  UZ_ERR_DATA = 3,
  UZ_ERR_NUMERIC = 4,
  UZ_ERR_ARGUMENT = 5
} uz_status;

typedef struct uz_scene uz_scene;
typedef struct uz_bundle uz_bundle;
typedef struct uz_model uz_model;

UZ_API const char* uz_version(void);
UZ_API const char* uz_last_error(void);
UZ_API void uz_string_free(char* s);

/* Scene / simulation. */
UZ_API uz_status uz_scene_load(const char* path, uz_scene** out);
UZ_API uz_status uz_scene_parse(const char* text, uz_scene** out);
UZ_API uz_status uz_scene_set_seed(uz_scene* scene, uint64_t seed);
UZ_API void uz_scene_free(uz_scene* scene);
UZ_API uz_status uz_simulate_csv(const uz_scene* scene, const char* out_csv, size_t* n_samples);

/* Dataset pipeline.
 * prepare options: {"train":0.7,"val":0.15,"test":0.15,"seed":0,
 *                   "min_altitude":null,"segment_gap_factor":5} */
UZ_API uz_status uz_prepare_csv(const char* csv_path, const char* options_json, uz_bundle** out);
UZ_API uz_status uz_bundle_load(const char* dir, uz_bundle** out);
UZ_API uz_status uz_bundle_save(const uz_bundle* bundle, const char* dir);
UZ_API uz_status uz_bundle_stats_json(const uz_bundle* bundle, char** out_json);
UZ_API void uz_bundle_free(uz_bundle* bundle);

/* Sequence model.
 * model options: {"cnn_channels":64,"kernel_size":3,"lstm_hidden":64,"dropout":0.3,
 *                 "ablation":"full"|"lstm_only"}
 * input options: {"features":"all"|["pci",...],"window":10,"standardize":true,"one_hot":false}
 * train options: {"epochs":30,"batch_size":64,"lr":1e-4,"weight_decay":0.01,
 *                 "max_grad_norm":1.0|null,"weighted_sampling":true,"weighted_loss":true,
 *                 "keep_best":true,"eval_every":1}
 *
 * uz_train builds the model for the selected inputs, trains it, evaluates the
 * selected checkpoint on the test split and returns a summary JSON. When
 * run_dir is non-NULL it receives model.json, inputs.json, epochs.jsonl,
 * curves.csv and metrics.json. on_epoch (nullable) receives one JSON line per
 * epoch. */
typedef void (*uz_epoch_callback)(const char* epoch_json, void* user);

UZ_API uz_status uz_train(const uz_bundle* bundle, const char* model_json, const char* input_json,
                          const char* train_json, uint64_t seed, const char* run_dir,
                          uz_epoch_callback on_epoch, void* user, uz_model** out_model,
                          char** out_summary_json);
UZ_API uz_status uz_model_load(const char* path, uz_model** out);
UZ_API uz_status uz_model_save(const uz_model* model, const char* path);
UZ_API uz_status uz_model_describe(const uz_model* model, char** out_json);
UZ_API void uz_model_free(uz_model* model);
/* split: "train" | "val" | "test". input_json must match the training inputs. */
UZ_API uz_status uz_evaluate(const uz_model* model, const uz_bundle* bundle, const char* input_json,
                             const char* split, char** out_metrics_json);

/* Baselines: kind "knn" or "logreg".
 * options: {"k":5,"lr":0.1,"epochs":200,"features":"all","flatten_windows":false,"window":10}
 * Fitted on the train split, scored on the test split. */
UZ_API uz_status uz_baseline(const uz_bundle* bundle, const char* kind, const char* options_json,
                             char** out_metrics_json);

/* Voxel fingerprinting on positions; map_json_path (nullable) receives the map. */
UZ_API uz_status uz_fingerprint(const uz_bundle* bundle, double cell_size, const char* map_json_path,
                                char** out_metrics_json);

/* Analytic operation counts for every model kind at two feature counts. */
UZ_API uz_status uz_complexity(const char* model_json, size_t n_train, size_t epochs, size_t f_a,
                               size_t f_b, char** out_json);

/* Lower-case hex SHA-256 of a file; out_hex must hold 65 bytes. */
UZ_API uz_status uz_sha256_file(const char* path, char* out_hex);

#ifdef __cplusplus
}
#endif

#endif /* UAVZONE_H */
