#ifndef PROBESCOPE_H
#define PROBESCOPE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PS_API __declspec(dllexport)
#else
#define PS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; 2-4 match the CLI exit codes. */
typedef enum ps_status {
    PS_OK = 0,
    PS_ERR_CONFIG = 2,
    PS_ERR_GEOMETRY = 3,
    PS_ERR_SOLVER = 4,
    PS_ERR_ARGUMENT = 5,
    PS_ERR_INTERNAL = 6
} ps_status;

typedef struct ps_config ps_config;
typedef struct ps_run ps_run;
typedef struct ps_problem ps_problem;

PS_API const char* ps_version(void);

/* Message of the last failed call on this thread ("" when none). */
PS_API const char* ps_last_error(void);

/* Suppresses warnings on stderr when nonzero. */
PS_API void ps_set_quiet(int quiet);

PS_API ps_status ps_config_load(const char* path, ps_config** out);
PS_API ps_status ps_config_parse(const char* json_text, ps_config** out);
/* "a.b=value"; the configuration is re-validated. */
PS_API ps_status ps_config_override(ps_config* cfg, const char* assignment);
/* Writes 16 hex digits plus NUL; buf_len must be at least 17. */
PS_API ps_status ps_config_hash(const ps_config* cfg, char* buf, size_t buf_len);
/* Task name of the configuration; the string lives as long as the handle. */
PS_API const char* ps_config_task(const ps_config* cfg);
PS_API void ps_config_free(ps_config* cfg);

/* Runs an experiment. task and out_dir may be NULL (keep the configured values);
   threads <= 0 and seed < 0 keep the configured values as well. */
PS_API ps_status ps_run_execute(const ps_config* cfg, const char* task, const char* out_dir, int threads,
                                int64_t seed, ps_run** out);
PS_API const char* ps_run_output_dir(const ps_run* run);
PS_API size_t ps_run_file_count(const ps_run* run);
PS_API const char* ps_run_file(const ps_run* run, size_t index);
/* Task report as JSON text. */
PS_API const char* ps_run_summary(const ps_run* run);
PS_API void ps_run_free(ps_run* run);

/* Mesh and DtN factorizations for the configured domain, obstacle, k and mesh size. */
PS_API ps_status ps_problem_create(const ps_config* cfg, ps_problem** out);
PS_API size_t ps_problem_outer_count(const ps_problem* p);
/* xy receives 2 * ps_problem_outer_count values (x0, y0, x1, y1, ...). */
PS_API ps_status ps_problem_outer_nodes(const ps_problem* p, double* xy);
/* Gap <(Lambda_0 - Lambda_D) f, conj f> for nodal Dirichlet data f on the outer nodes. */
PS_API ps_status ps_problem_gap(const ps_problem* p, const double* f_re, const double* f_im, double* gap_re,
                                double* gap_im);
/* Indicator function I(x) at a point outside the obstacle. */
PS_API ps_status ps_problem_indicator(const ps_problem* p, double x, double y, double* value);
PS_API void ps_problem_free(ps_problem* p);

#ifdef __cplusplus
}
#endif

#endif
