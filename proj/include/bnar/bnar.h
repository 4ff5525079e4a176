#ifndef BNAR_BNAR_H
#define BNAR_BNAR_H

/* C interface to the stochastic Burgers closure toolkit.
 *
 * Every function returns a bnar_status. On failure the message of the most
 * recent error on the calling thread is available from bnar_last_error().
 * Objects are opaque and owned by the caller once returned; release them with
 * the matching *_free function. Strings returned through char** must be
 * released with bnar_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BNAR_API __declspec(dllexport)
#elif defined(BNAR_BUILDING_LIBRARY)
#define BNAR_API __attribute__((visibility("default")))
#else
#define BNAR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bnar_status {
  BNAR_OK = 0,
  BNAR_ERR_INTERNAL = 1,
  BNAR_ERR_CONFIG = 2,
  BNAR_ERR_DATA = 3,
  BNAR_ERR_BLOWUP = 4
} bnar_status;

typedef struct bnar_dataset bnar_dataset;
typedef struct bnar_model bnar_model;

BNAR_API const char* bnar_version(void);
BNAR_API const char* bnar_last_error(void);
BNAR_API void bnar_string_free(char* s);

/* Runs one of "simulate", "gen-data", "fit", "validate", "sweep" with a JSON
 * configuration. On success *summary_json (if non-null) receives the
 * command's JSON summary. */
BNAR_API bnar_status bnar_run(const char* command, const char* config_json,
                              char** summary_json);

/* Resolves a configuration (scale presets and defaults) without running. */
BNAR_API bnar_status bnar_resolve_config(const char* config_json, char** resolved_json);

BNAR_API bnar_status bnar_dataset_load(const char* path, bnar_dataset** out);
BNAR_API bnar_status bnar_dataset_save(const bnar_dataset* ds, const char* path);
BNAR_API void bnar_dataset_free(bnar_dataset* ds);
BNAR_API bnar_status bnar_dataset_dims(const bnar_dataset* ds, int* K, int* n_traj,
                                       int* n_steps, int* gap, double* delta);
/* Copies state n of trajectory m as K (re, im) pairs into out[2K]. */
BNAR_API bnar_status bnar_dataset_state(const bnar_dataset* ds, int m, int n, double* out);
BNAR_API bnar_status bnar_dataset_export_csv(const bnar_dataset* ds, int m, const char* path);

/* Least-squares fit with the default term set for lag p. *report_json may be
 * null. */
BNAR_API bnar_status bnar_fit(const bnar_dataset* ds, int p, double ridge, bnar_model** out,
                              char** report_json);

BNAR_API bnar_status bnar_model_load(const char* path, bnar_model** out);
BNAR_API bnar_status bnar_model_save(const bnar_model* model, const char* path);
BNAR_API bnar_status bnar_model_to_json(const bnar_model* model, char** json);
BNAR_API void bnar_model_free(bnar_model* model);

/* Simulates the model for n_steps from the window given by trajectory m of
 * `ds` at its first p states, with white-noise forcing of scale sigma on k0
 * modes. out receives (n_steps + 1) * K (re, im) pairs; rows after a blow-up
 * are zero and *blow_up_step is set to the failing step (else -1). */
BNAR_API bnar_status bnar_model_simulate(const bnar_model* model, const bnar_dataset* ds, int m,
                                         int64_t n_steps, double sigma, int k0, uint64_t seed,
                                         double* out, int64_t* blow_up_step);

#ifdef __cplusplus
}
#endif

#endif
