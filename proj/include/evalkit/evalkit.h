/* Copyright 2026 The Evalkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Public C API of the evalkit shared library.
 *
 * Usage: open a session from a config file (or NULL for defaults), apply
 * key overrides, run subcommands, close. All functions return
 * EVALKIT_OK (0) on success; on failure evalkit_last_error() /
 * evalkit_session_error() return a JSON object string
 * {"code": ..., "message": ..., "detail": ...} that stays valid until the
 * next call on the same session (or thread, for the stateless helpers).
 */

#ifndef EVALKIT_EVALKIT_H_
#define EVALKIT_EVALKIT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EVALKIT_API __declspec(dllexport)
#else
#define EVALKIT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum evalkit_status {
  EVALKIT_OK = 0,
  EVALKIT_ERR_CONFIG = 1,
  EVALKIT_ERR_IO = 2,
  EVALKIT_ERR_PRECONDITION = 3,
  EVALKIT_ERR_SCHEMA = 4,
  EVALKIT_ERR_CACHE_MISS = 5,
  EVALKIT_ERR_BACKEND = 6,
  EVALKIT_ERR_METRIC = 7,
  EVALKIT_ERR_INTERNAL = 8
} evalkit_status;

/* Opaque session: configuration plus lazily opened backends/cache. */
typedef struct evalkit_session evalkit_session;

EVALKIT_API const char* evalkit_version(void);

/* config_path may be NULL (defaults + EVALKIT_* environment variables). */
EVALKIT_API evalkit_status evalkit_session_open(const char* config_path,
                                                evalkit_session** out_session);
EVALKIT_API void evalkit_session_close(evalkit_session* session);

/* Override one dotted config key, e.g. ("run.mode", "replay"). */
EVALKIT_API evalkit_status evalkit_session_set(evalkit_session* session, const char* key,
                                               const char* value);

/* subcommand: generate | aesthetics | realism | coverage | fairness | report */
EVALKIT_API evalkit_status evalkit_run(evalkit_session* session, const char* subcommand);

/* JSON error description for the last failing call on this session, or NULL. */
EVALKIT_API const char* evalkit_session_error(const evalkit_session* session);

/* Newline-joined list of report files written by the last successful run. */
EVALKIT_API const char* evalkit_session_output_files(const evalkit_session* session);

/* ---- stateless metric helpers (thread-local error state) ---- */

/* JSON error description for the last failing stateless call on this thread. */
EVALKIT_API const char* evalkit_last_error(void);

EVALKIT_API evalkit_status evalkit_srcc(const double* pred, const double* gt, size_t n,
                                        double* out_coefficient);
EVALKIT_API evalkit_status evalkit_rank_accuracy(const double* pred, const double* gt, size_t n,
                                                 double* out_fraction);

/* Shannon entropy (bits) of a cluster-size histogram. */
EVALKIT_API evalkit_status evalkit_semantic_entropy(const uint32_t* counts, size_t k,
                                                    double* out_bits);

/* Labels: 0 = good, 1 = bad, 2 = invisible. Inputs are the ten component
 * labels in canonical order (eye, nose, mouth, hair, cheek, hand, arm,
 * foot, leg, trunk); outputs are face, body, whole. */
EVALKIT_API evalkit_status evalkit_merge_coarse(const int* component_labels,
                                                int* out_face_body_whole);

/* attribute: "gender" | "race" | "age"; strict rule entropy < threshold. */
EVALKIT_API evalkit_status evalkit_detect_bias(const char* attribute, double entropy_bits,
                                               int* out_biased);

/* Fraction of bad among visible predictions (labels as above). */
EVALKIT_API evalkit_status evalkit_defect_rate(const int* labels, size_t n, double* out_rate);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* EVALKIT_EVALKIT_H_ */
