#ifndef SUSPFLOW_H
#define SUSPFLOW_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SF_API __declspec(dllexport)
#else
#define SF_API __attribute__((visibility("default")))
#endif

typedef enum sf_status {
  SF_OK = 0,
  SF_INVALID_ARGUMENT = 1,
  SF_DOMAIN_VIOLATION = 2,
  SF_RESOURCE_LIMIT = 3,
  SF_NUMERICAL_FAILURE = 4,
  SF_PRECONDITION_VIOLATION = 5,
  SF_PARSE_ERROR = 6,
  SF_VALIDATION_ERROR = 7,
  SF_INTERNAL_ERROR = 8
} sf_status;

typedef struct sf_config sf_config;
typedef struct sf_report sf_report;
typedef struct sf_ceiling sf_ceiling;

/* Library version string, static storage. */
SF_API const char* sf_version(void);

/* Message of the last failing call on this thread; "" when none. The pointer
   stays valid until the next failing call on the same thread. */
SF_API const char* sf_last_error(void);
/* Structured detail of the last failure as JSON text; "null" when none. */
SF_API const char* sf_last_error_detail(void);

/* Process exit code for a status: 0 ok, 2 resource, 3 numerical, 1 otherwise. */
SF_API int sf_exit_code(sf_status status);

SF_API void sf_string_free(char* s);

/* Configuration ---------------------------------------------------------- */

/* Parses and validates. On failure *out is NULL and the error detail lists
   every violation (or the line and column of a syntax error). */
SF_API sf_status sf_config_parse(const char* text, size_t len, sf_config** out);
/* Syntax and type checks only, so overrides can be applied before validation. */
SF_API sf_status sf_config_parse_partial(const char* text, size_t len, sf_config** out);
/* Parses, applies `n` overrides ("key=literal") in order, then validates, so
   the error detail lists every problem across the file and the overrides. */
SF_API sf_status sf_config_parse_with(const char* text, size_t len, const char* const* overrides, size_t n,
                                      sf_config** out);
SF_API sf_config* sf_config_default(void);
/* Assigns `key` ("name" or "section.name") from a literal as written in a file. */
SF_API sf_status sf_config_set(sf_config* cfg, const char* key, const char* literal);
SF_API sf_status sf_config_validate(const sf_config* cfg);
/* Reads a value as JSON text; caller frees with sf_string_free. */
SF_API sf_status sf_config_get(const sf_config* cfg, const char* key, char** out);
/* Canonical echo as JSON text and its git-style blob hash (40 hex chars). */
SF_API sf_status sf_config_dump(const sf_config* cfg, char** out);
SF_API sf_status sf_config_hash(const sf_config* cfg, char** out);
SF_API void sf_config_free(sf_config* cfg);

/* Runs ---------------------------------------------------------------------- */

/* Runs the configured experiment on `workers` threads (0 uses the config).
   Resource and numerical failures still produce a report whose payload holds
   the error; the return value is then the failure status. */
SF_API sf_status sf_run(const sf_config* cfg, unsigned workers, sf_report** out);
SF_API sf_status sf_report_status(const sf_report* report);
/* format: "json", "jsonl" or "csv". */
SF_API sf_status sf_report_emit(const sf_report* report, const char* format, char** out, size_t* len);
SF_API void sf_report_free(sf_report* report);

/* Direct access -------------------------------------------------------------- */

/* harmonics: n_harmonics triples (k, cos, sin), k stored as a double. */
SF_API sf_status sf_ceiling_create(int ell, double mean, const double* harmonics, size_t n_harmonics,
                                   sf_ceiling** out);
SF_API sf_status sf_ceiling_eval(const sf_ceiling* f, double x, int order, double* out);
SF_API void sf_ceiling_free(sf_ceiling* f);

SF_API sf_status sf_time_t_map(const sf_ceiling* f, double x, double s, double t, double* out_x, double* out_s);
/* Counts inverse branches of (x, s) under the time-t map and sums 1/E. */
SF_API sf_status sf_branch_sum(const sf_ceiling* f, double x, double s, double t, size_t cap, size_t* count,
                               double* sum);

#ifdef __cplusplus
}
#endif

#endif
