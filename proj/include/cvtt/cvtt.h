#ifndef CVTT_CVTT_H
#define CVTT_CVTT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define CVTT_API __declspec(dllexport)
#else
#  define CVTT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum cvtt_status {
  CVTT_OK = 0,
  CVTT_ERR_USAGE = 1,
  CVTT_ERR_DATA = 2,
  CVTT_ERR_EXEC = 3
} cvtt_status;

typedef struct cvtt_log cvtt_log;

typedef struct cvtt_schema {
  const char* user;      /* column name, or decimal index; NULL = default */
  const char* item;
  const char* timestamp;
  const char* weight;    /* NULL = every row weighs 1 */
  char delimiter;        /* 0 = ',' */
  int has_header;
  int iso8601;           /* timestamps as ISO-8601 dates instead of unix seconds */
} cvtt_schema;

typedef struct cvtt_synth_spec {
  size_t n_users;
  size_t n_items;
  size_t n_periods;
  size_t interactions_per_period;
  double zipf_exponent;
  size_t shift_period; /* 0 = no shift */
  uint64_t seed;
} cvtt_synth_spec;

typedef struct cvtt_run_options {
  const char* output_dir; /* NULL = from config */
  int64_t seed;           /* < 0 = from config */
  int64_t n_trials;       /* < 0 = from config */
  int threads;            /* <= 0 = from config */
} cvtt_run_options;

CVTT_API const char* cvtt_version(void);

/* Message for the last failing call on this thread; "" if none. */
CVTT_API const char* cvtt_last_error(void);

CVTT_API void cvtt_schema_init(cvtt_schema* schema);
CVTT_API void cvtt_synth_spec_init(cvtt_synth_spec* spec);
CVTT_API void cvtt_run_options_init(cvtt_run_options* options);

CVTT_API cvtt_status cvtt_log_load(const char* path, const cvtt_schema* schema, cvtt_log** out,
                                   size_t* skipped_rows);
CVTT_API cvtt_status cvtt_synth_generate(const cvtt_synth_spec* spec, cvtt_log** out);
CVTT_API void cvtt_log_free(cvtt_log* log);

/* Parse warnings from cvtt_log_load (skipped rows with line numbers); "" if none. */
CVTT_API const char* cvtt_log_warnings(const cvtt_log* log);
CVTT_API size_t cvtt_log_size(const cvtt_log* log);
CVTT_API size_t cvtt_log_n_users(const cvtt_log* log);
CVTT_API size_t cvtt_log_n_items(const cvtt_log* log);

/* Strings returned through `char**` are owned by the caller. */
CVTT_API cvtt_status cvtt_log_to_csv(const cvtt_log* log, char** out);
CVTT_API cvtt_status cvtt_log_write(const cvtt_log* log, const char* path);
CVTT_API cvtt_status cvtt_log_stats_csv(const cvtt_log* log, const char* granularity, char** out);
CVTT_API void cvtt_string_free(char* s);

CVTT_API cvtt_status cvtt_run_config(const char* config_path, const cvtt_run_options* options,
                                     char** summary_json);
CVTT_API cvtt_status cvtt_check_config(const char* config_path, char** resolved_json);
CVTT_API cvtt_status cvtt_plot_report(const char* report_path, const char* metric, size_t k,
                                      const char* svg_path);

#ifdef __cplusplus
}
#endif

#endif
