/* Copyright 2026 The iclbias Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Stable C interface of the iclbias shared library. All functions return an
 * icb_status; on failure icb_last_error() holds a message for the calling
 * thread until its next call into the library. */

#ifndef ICLBIAS_ICLBIAS_H_
#define ICLBIAS_ICLBIAS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(ICLBIAS_BUILDING_LIBRARY)
#define ICB_API __attribute__((visibility("default")))
#else
#define ICB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum icb_status {
  ICB_OK = 0,
  ICB_INVALID_ARGUMENT = 1,
  ICB_SCHEMA = 2,
  ICB_PARSE = 3,
  ICB_DEGENERATE = 4,
  ICB_IO = 5,
  ICB_TRANSPORT = 6,
  ICB_CONFIG = 7,
  ICB_INTERNAL = 8
} icb_status;

typedef enum icb_family {
  ICB_PROPAGATION = 0,
  ICB_ATTACK = 1,
  ICB_MITIGATION = 2
} icb_family;

typedef enum icb_format { ICB_CSV = 0, ICB_JSON = 1 } icb_format;

typedef struct icb_config icb_config;
typedef struct icb_report icb_report;

ICB_API const char* icb_version(void);
ICB_API const char* icb_last_error(void);
ICB_API const char* icb_status_name(icb_status status);

/* Configs. */
ICB_API icb_status icb_config_load(const char* path, icb_config** out);
ICB_API icb_status icb_config_parse(const char* json_text, const char* base_dir,
                                    icb_config** out);
ICB_API void icb_config_free(icb_config* config);
ICB_API icb_status icb_config_set_workers(icb_config* config, int workers);
/* Replaces the seed list with a single seed. */
ICB_API icb_status icb_config_set_seed(icb_config* config, uint64_t seed);
ICB_API icb_status icb_config_set_output_dir(icb_config* config, const char* dir);
ICB_API icb_status icb_config_set_dump_prompts(icb_config* config, int enabled);
ICB_API icb_status icb_config_output_dir(const icb_config* config, const char** out);

/* Runs. */
ICB_API icb_status icb_run(const icb_config* config, icb_family family, icb_report** out);
/* One grid point: the first k and pi of the grids and the first seed, with
 * the family implied by the bias mode. Writes the synthetic CSV and, when
 * prompt_path is non-NULL, the first rendered prompt. */
ICB_API icb_status icb_generate(const icb_config* config, const char* csv_path,
                                const char* prompt_path);

/* Reports. */
ICB_API icb_status icb_report_write(const icb_report* report, const char* dir,
                                    icb_format format);
ICB_API icb_status icb_report_load(const char* path, icb_format format, icb_report** out);
ICB_API size_t icb_report_rows(const icb_report* report);
/* Numeric cell by column name; NaN for NA cells. */
ICB_API icb_status icb_report_value(const icb_report* report, size_t row, const char* column,
                                    double* out);
/* Text cell by column name; the pointer lives as long as the report. */
ICB_API icb_status icb_report_text(const icb_report* report, size_t row, const char* column,
                                   const char** out);
/* Serializes the rows; free the result with icb_string_free. */
ICB_API icb_status icb_report_serialize(const icb_report* report, icb_format format,
                                        char** out);
ICB_API void icb_report_free(icb_report* report);
ICB_API void icb_string_free(char* s);

/* Metric helpers over plain arrays. p and q must be probability vectors. */
ICB_API icb_status icb_tvd(const double* p, const double* q, size_t n, double* out);
ICB_API icb_status icb_jsd(const double* p, const double* q, size_t n, double* out);
ICB_API icb_status icb_spd(const char* const* labels, const uint8_t* unprivileged, size_t n,
                           const char* favorable, double* out);
ICB_API icb_status icb_alpha_schedule(int k, double tau, double* out);

#ifdef __cplusplus
}
#endif

#endif /* ICLBIAS_ICLBIAS_H_ */
