/* C interface to the graphmend core.
 *
 * Handles are opaque. Every function returning gm_status leaves a
 * thread-local message retrievable with gm_last_error() when it fails.
 * Strings returned through char** are owned by the caller and released with
 * gm_string_free(); strings returned as const char* belong to their handle.
 */
#ifndef GRAPHMEND_GRAPHMEND_H
#define GRAPHMEND_GRAPHMEND_H

#include <stddef.h>

#if defined(_WIN32)
#define GM_API __declspec(dllexport)
#else
#define GM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gm_status {
  GM_OK = 0,
  GM_ERR_INVALID_ARGUMENT = 1,
  GM_ERR_IO = 2,
  GM_ERR_CONFIG = 3,
  GM_ERR_SYNTAX = 4,
  GM_ERR_VERIFICATION = 5,
  GM_ERR_INTERNAL = 6
} gm_status;

/* Per-file outcome, mirrors the report's "status" field. */
typedef enum gm_file_status {
  GM_FILE_OK = 0,
  GM_FILE_SKIPPED = 1,
  GM_FILE_ABORTED = 2,
  GM_FILE_ERROR = 3
} gm_file_status;

typedef struct gm_config gm_config;
typedef struct gm_result gm_result;

GM_API const char *gm_version(void);

/* Message of the last failed call on this thread; "" if none. */
GM_API const char *gm_last_error(void);

/* Configuration starts with the built-in tables. */
GM_API gm_status gm_config_create(gm_config **out);
GM_API void gm_config_destroy(gm_config *cfg);
GM_API gm_status gm_config_load_attr_table(gm_config *cfg, const char *path);
GM_API gm_status gm_config_load_dynamic_shape_ops(gm_config *cfg, const char *path);
GM_API gm_status gm_config_load_allowlist(gm_config *cfg, const char *path);

/* Runs the full pipeline over in-memory text. A syntax error in `text` is not
 * an API failure: it yields a result whose status is GM_FILE_ERROR. */
GM_API gm_status gm_process_source(const gm_config *cfg, const char *path, const char *text,
                                   size_t len, gm_result **out);
/* Same, reading the file first. Unreadable files return GM_ERR_IO. */
GM_API gm_status gm_process_file(const gm_config *cfg, const char *path, gm_result **out);

GM_API void gm_result_free(gm_result *res);
GM_API gm_file_status gm_result_status(const gm_result *res);
GM_API int gm_result_changed(const gm_result *res);
/* Rewritten text (equal to the input when nothing changed). */
GM_API const char *gm_result_text(const gm_result *res, size_t *len);
/* Number of tags found / fixed. */
GM_API size_t gm_result_found(const gm_result *res);
GM_API size_t gm_result_fixed(const gm_result *res);
/* Single-file structured report (same schema as the CLI's). */
GM_API gm_status gm_result_report_json(const gm_result *res, const char *mode, int with_timing,
                                       char **out);
/* Unified diff of input vs output with a/ and b/ prefixes; "" if unchanged. */
GM_API gm_status gm_result_diff(const gm_result *res, char **out);

/* Aggregates several results into one report document, sorted by path. */
GM_API gm_status gm_report_json(const gm_result *const *results, size_t count, const char *mode,
                                int with_timing, char **out);
GM_API gm_status gm_report_text(const gm_result *const *results, size_t count, char **out);

/* Debug dump of scopes and CFG edge lists. */
GM_API gm_status gm_dump_ir(const char *path, const char *text, size_t len, char **out);

GM_API void gm_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif /* GRAPHMEND_GRAPHMEND_H */
