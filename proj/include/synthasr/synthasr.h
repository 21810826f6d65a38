// Copyright (c) 2026 The synthasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef SYNTHASR_SYNTHASR_H_
#define SYNTHASR_SYNTHASR_H_

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define SYNTHASR_API __attribute__((visibility("default")))
#else
#define SYNTHASR_API
#endif

typedef enum synthasr_status {
  SYNTHASR_OK = 0,
  SYNTHASR_ERR_INVALID_ARGUMENT = 1,
  SYNTHASR_ERR_SHAPE = 2,
  SYNTHASR_ERR_IO = 3,
  SYNTHASR_ERR_FORMAT = 4,
  SYNTHASR_ERR_INFEASIBLE = 5,
  SYNTHASR_ERR_CONFIG = 6,
  SYNTHASR_ERR_STAGE = 7,
  SYNTHASR_ERR_INTERNAL = 8
} synthasr_status;

typedef enum synthasr_log_level {
  SYNTHASR_LOG_DEBUG = 0,
  SYNTHASR_LOG_INFO = 1,
  SYNTHASR_LOG_WARN = 2,
  SYNTHASR_LOG_ERROR = 3,
  SYNTHASR_LOG_OFF = 4
} synthasr_log_level;

/* Opaque handles. */
typedef struct synthasr_config synthasr_config;
typedef struct synthasr_experiment synthasr_experiment;

SYNTHASR_API const char* synthasr_version(void);
SYNTHASR_API const char* synthasr_status_name(synthasr_status status);
/* Message of the last failed call on this thread; "" if none. */
SYNTHASR_API const char* synthasr_last_error(void);
/* SYNTHASR_WORKERS when set to a positive integer, else the core count. */
SYNTHASR_API int synthasr_default_workers(void);
SYNTHASR_API void synthasr_set_log_level(synthasr_log_level level);

/* ---- configuration ---- */
SYNTHASR_API synthasr_status synthasr_config_load(const char* path, synthasr_config** out);
/* Small built-in setup that generates its own toy corpus. */
SYNTHASR_API synthasr_status synthasr_config_toy(synthasr_config** out);
SYNTHASR_API synthasr_status synthasr_config_save(const synthasr_config* cfg, const char* path);
SYNTHASR_API synthasr_status synthasr_config_set_work_dir(synthasr_config* cfg, const char* work_dir);
SYNTHASR_API synthasr_status synthasr_config_set_seed(synthasr_config* cfg, unsigned long long seed);
SYNTHASR_API void synthasr_config_free(synthasr_config* cfg);

/* ---- experiment ---- */
SYNTHASR_API synthasr_status synthasr_experiment_open(const synthasr_config* cfg, int workers,
                                                      synthasr_experiment** out);
/* Stage names: ingest, featurize-tts, train-tts, train-mel2lin, synthesize,
   mix, featurize-asr, train-asr, decode, report. */
SYNTHASR_API synthasr_status synthasr_experiment_stage(synthasr_experiment* exp, const char* stage);
SYNTHASR_API synthasr_status synthasr_experiment_run(synthasr_experiment* exp);
/* Work directory of the experiment; valid until the handle is freed. */
SYNTHASR_API const char* synthasr_experiment_work_dir(const synthasr_experiment* exp);
SYNTHASR_API void synthasr_experiment_free(synthasr_experiment* exp);

/* ---- standalone tools ---- */
/* Features of every manifest entry into out_dir/<id>.fea plus
   out_dir/stats.txt. kind: "logmel", "linear" or "mfcc". cfg may be NULL
   for default analysis settings; stats_path may be NULL to estimate. */
SYNTHASR_API synthasr_status synthasr_featurize(const synthasr_config* cfg, const char* manifest, const char* kind,
                                                const char* out_dir, int normalize, const char* stats_path,
                                                int workers);
/* Speed perturbation and optional silence removal into out_dir, plus
   out_dir/augmented.jsonl. remove_silence != 0 enables silence_db. */
SYNTHASR_API synthasr_status synthasr_augment_audio(const char* manifest, const char* out_dir,
                                                    const double* speeds, size_t n_speeds, int remove_silence,
                                                    double silence_db, int workers);
/* SpecAugment of the .fea files in in_dir, using cfg's masking settings. */
SYNTHASR_API synthasr_status synthasr_augment_features(const synthasr_config* cfg, const char* manifest,
                                                       const char* in_dir, const char* out_dir,
                                                       unsigned long long seed, int workers);

#ifdef __cplusplus
}
#endif

#endif  // SYNTHASR_SYNTHASR_H_
