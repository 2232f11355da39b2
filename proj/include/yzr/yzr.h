/* C interface to the detector, trainer and service. Strings returned through
 * char** out-parameters are heap-allocated; release them with yzr_string_free.
 * On failure every call returns a non-zero status and yzr_last_error() holds
 * the message for the calling thread. */
#ifndef YZR_H
#define YZR_H

#include <stddef.h>
#include <stdint.h>

#if defined(YZR_BUILDING_LIBRARY)
#define YZR_API __attribute__((visibility("default")))
#else
#define YZR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum yzr_status {
    YZR_OK = 0,
    YZR_ERR_INVALID_ARGUMENT = 1,
    YZR_ERR_EMPTY_TOKEN = 2,
    YZR_ERR_TOKEN_TOO_LONG = 3,
    YZR_ERR_TOKEN_TOO_SHORT = 4,
    YZR_ERR_IO = 5,
    YZR_ERR_FORMAT = 6,
    YZR_ERR_CONFLICT = 7,
    YZR_ERR_SHAPE = 8,
    YZR_ERR_NON_FINITE = 9,
    YZR_ERR_STALE_CACHE = 10,
    YZR_ERR_VERSION_MISMATCH = 11,
    YZR_ERR_CHECKSUM = 12,
    YZR_ERR_ZERO_VECTOR = 13,
    YZR_ERR_EMPTY_INDEX = 14,
    YZR_ERR_DUPLICATE_KEY = 15,
    YZR_ERR_EMPTY_DATASET = 16,
    YZR_ERR_TOO_FEW_TOKENS = 17,
    YZR_ERR_SPEC_INFEASIBLE = 18,
    YZR_ERR_NOT_ENOUGH_VARIANTS = 19,
    YZR_ERR_NOT_INITIALIZED = 20,
    YZR_ERR_SERVICE = 21,
    YZR_ERR_INTERNAL = 99
} yzr_status;

typedef struct yzr_detector yzr_detector;
typedef struct yzr_service yzr_service;

YZR_API const char* yzr_version(void);
YZR_API const char* yzr_status_name(yzr_status status);
YZR_API const char* yzr_last_error(void);
YZR_API void yzr_string_free(char* s);
/* "trace", "debug", "info", "warn", "error", "off" */
YZR_API yzr_status yzr_set_log_level(const char* level);

/* ---- detector ---------------------------------------------------------- */

/* config_path may be NULL: empty vocabularies, no weights. threshold > 0
 * overrides the configured threshold. */
YZR_API yzr_status yzr_detector_open(const char* config_path, double threshold, yzr_detector** out);
YZR_API void yzr_detector_close(yzr_detector* det);
YZR_API yzr_status yzr_detector_set_threshold(yzr_detector* det, double threshold);
/* meta_json may be NULL. Writes one verdict record (JSON). */
YZR_API yzr_status yzr_detector_detect(yzr_detector* det, const char* chat_id, const char* text, const char* meta_json,
                                       char** verdict_json);
/* Makes the key live. With persist != 0 the key is appended to the configured
 * profane vocabulary file and the configured index file is rewritten. The
 * normalized key is written to normalized_out when it is not NULL. */
YZR_API yzr_status yzr_detector_vocab_add(yzr_detector* det, const char* key, int persist, char** normalized_out);
/* Writes the index to path, or to the configured index path when path is NULL. */
YZR_API yzr_status yzr_detector_save_index(yzr_detector* det, const char* path);
/* Labeled CSV (text,label). baseline != 0 runs the exact-match baseline;
 * n_sweep > 0 evaluates every threshold in sweep (ascending) instead of the
 * detector's threshold. */
YZR_API yzr_status yzr_detector_eval(yzr_detector* det, const char* data_csv, int baseline, const double* sweep,
                                     size_t n_sweep, char** table_out, char** csv_out);

/* ---- training and data ------------------------------------------------- */

typedef struct yzr_train_options {
    const char* config_path;  /* may be NULL: defaults */
    const char* tokens_path;  /* one token per line */
    const char* weights_out;
    const char* history_out;  /* may be NULL */
    int epochs;               /* > 0 overrides the config */
    int64_t seed;             /* >= 0 overrides the config */
    int verbose;              /* log every epoch */
} yzr_train_options;

YZR_API yzr_status yzr_train(const yzr_train_options* opts);
YZR_API yzr_status yzr_export_embeddings(const char* weights_path, const char* tokens_path, const char* out_csv);

typedef struct yzr_fixture_options {
    const char* out_dir;
    int n_safe;
    int n_profane;
    uint64_t seed;
    int n_chats;
    double profane_fraction;
    const char* style; /* "exact", "censored", "variant", "spaced", "mixed" */
} yzr_fixture_options;

YZR_API yzr_status yzr_fixtures_write(const yzr_fixture_options* opts);

/* ---- service ------------------------------------------------------------ */

/* The service shares the detector; the detector handle must outlive it.
 * workers <= 0 uses the configured worker count. */
YZR_API yzr_status yzr_service_open(yzr_detector* det, int workers, yzr_service** out);
YZR_API void yzr_service_close(yzr_service* svc);
YZR_API yzr_status yzr_service_submit(yzr_service* svc, const char* message_json);
/* *record_out is NULL on timeout, or once the service is stopped and drained. */
YZR_API yzr_status yzr_service_poll(yzr_service* svc, int timeout_ms, char** record_out);
/* Stops accepting, finishes queued messages, stops any listener. */
YZR_API yzr_status yzr_service_stop(yzr_service* svc);
/* Records on stdin, verdicts on stdout, until EOF. */
YZR_API yzr_status yzr_service_serve_stdio(yzr_service* svc);
/* "HOST:PORT", or NULL for the configured address; port 0 picks a free
 * port, reported through bound_port. */
YZR_API yzr_status yzr_service_listen(yzr_service* svc, const char* address, int* bound_port);
/* Non-zero when the configuration names a listen address. */
YZR_API int yzr_service_listen_configured(const yzr_service* svc);

#ifdef __cplusplus
}
#endif

#endif /* YZR_H */
