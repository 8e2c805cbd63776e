/* SPDX-License-Identifier: Apache-2.0 */
#ifndef UWMMSE_UWMMSE_H
#define UWMMSE_UWMMSE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(UWMMSE_BUILDING_LIBRARY)
#define UWMMSE_API __declspec(dllexport)
#else
#define UWMMSE_API __declspec(dllimport)
#endif
#else
#define UWMMSE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every function that can fail returns one; on failure the
 * thread-local message from uwmmse_last_error() describes the cause. */
typedef enum uwmmse_status {
  UWMMSE_OK = 0,
  UWMMSE_E_INVALID_ARGUMENT = 1,
  UWMMSE_E_DIMENSION = 2,
  UWMMSE_E_CONVERGENCE = 3,
  UWMMSE_E_DEGENERATE_INPUT = 4,
  UWMMSE_E_DOMAIN = 5,
  UWMMSE_E_NON_FINITE = 6,
  UWMMSE_E_IO = 7,
  UWMMSE_E_CORRUPT_FILE = 8,
  UWMMSE_E_VERSION_MISMATCH = 9,
  UWMMSE_E_SHAPE_MISMATCH = 10,
  UWMMSE_E_UNKNOWN_FIGURE = 11,
  UWMMSE_E_INDEX_OUT_OF_RANGE = 12,
  UWMMSE_E_INTERNAL = 99
} uwmmse_status;

/* Trained step sizes with their metadata. */
typedef struct uwmmse_steps uwmmse_steps;

typedef void (*uwmmse_progress_fn)(const char* message, void* user);

typedef struct uwmmse_train_options {
  double snr_db;
  size_t layers;
  size_t pgd_steps;
  int tied;
  uint64_t training_samples; /* rounded up to whole batches */
  size_t batch_size;
  double learning_rate;
  double step_init;
  double grad_clip; /* 0 disables clipping */
  uint64_t seed;
} uwmmse_train_options;

UWMMSE_API const char* uwmmse_version(void);
UWMMSE_API const char* uwmmse_status_name(uwmmse_status status);
/* Message of the last failure on this thread, or "" if none. */
UWMMSE_API const char* uwmmse_last_error(void);

UWMMSE_API void uwmmse_train_options_default(uwmmse_train_options* opts);

/* Trains step sizes. loss_csv may be NULL; otherwise it receives the
 * per-batch loss history. */
UWMMSE_API uwmmse_status uwmmse_train(const uwmmse_train_options* opts, const char* loss_csv,
                                      uwmmse_progress_fn progress, void* user,
                                      uwmmse_steps** out);

/* Progressive extension to target_pgd_steps, retraining every step size on
 * stage_samples fresh channels per added step (0 selects the default). */
UWMMSE_API uwmmse_status uwmmse_extend(const uwmmse_steps* base, size_t target_pgd_steps,
                                       uint64_t stage_samples, uwmmse_progress_fn progress,
                                       void* user, uwmmse_steps** out);

UWMMSE_API uwmmse_status uwmmse_steps_save(const uwmmse_steps* steps, const char* path);
UWMMSE_API uwmmse_status uwmmse_steps_load(const char* path, uwmmse_steps** out);
UWMMSE_API void uwmmse_steps_free(uwmmse_steps* steps);

UWMMSE_API uwmmse_status uwmmse_steps_shape(const uwmmse_steps* steps, size_t* layers,
                                            size_t* pgd_steps, int* tied);
UWMMSE_API uwmmse_status uwmmse_steps_get(const uwmmse_steps* steps, size_t layer, size_t step,
                                          double* value);
UWMMSE_API uwmmse_status uwmmse_steps_metadata(const uwmmse_steps* steps, double* snr_db,
                                               uint64_t* seed, uint64_t* training_samples);

/* method: wmmse_convergence, wmmse_truncated (uses layers), unfolded or
 * unfolded_tied (use steps). std_error may be NULL. */
UWMMSE_API uwmmse_status uwmmse_evaluate(const char* method, double snr_db, size_t layers,
                                         const uwmmse_steps* steps, size_t samples,
                                         uint64_t seed, double* mean, double* std_error);

/* Writes the figure CSV. scale in (0, 1]. */
UWMMSE_API uwmmse_status uwmmse_reproduce(int figure, double scale, uint64_t seed,
                                          const char* csv_path, uwmmse_progress_fn progress,
                                          void* user);

/* Runs a key = value experiment file. csv_path overrides its `output` key
 * and may be NULL. */
UWMMSE_API uwmmse_status uwmmse_run_experiment(const char* config_path, const char* csv_path,
                                               uwmmse_progress_fn progress, void* user);

typedef void (*uwmmse_selftest_fn)(const char* name, int passed, const char* detail,
                                   void* user);

/* *all_passed is set to 1 only if every oracle suite passed. */
UWMMSE_API uwmmse_status uwmmse_selftest(uint64_t seed, uwmmse_selftest_fn report, void* user,
                                         int* all_passed);

#ifdef __cplusplus
}
#endif

#endif /* UWMMSE_UWMMSE_H */
