/* C interface to the edgeptq post-training quantization toolkit.
 *
 * Every function returns an eptq_status. On failure, eptq_last_error()
 * returns a message describing the most recent error on the calling thread.
 * Handles are opaque and must be released with their matching _free call.
 * Strings returned through `const char**` stay valid until the owning handle
 * is freed.
 */
#ifndef EDGEPTQ_H
#define EDGEPTQ_H

#include <stddef.h>

#if defined(_WIN32)
#define EPTQ_API __declspec(dllexport)
#else
#define EPTQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum eptq_status {
    EPTQ_OK = 0,
    EPTQ_INVALID_ARGUMENT = 1,
    EPTQ_CONFIG_ERROR = 2,
    EPTQ_FORMAT_ERROR = 3,
    EPTQ_DATA_ERROR = 4,
    EPTQ_IO_ERROR = 5,
    EPTQ_SHAPE_ERROR = 6,
    EPTQ_CONDITIONING_ERROR = 7,
    EPTQ_UNDEFINED_STATISTIC = 8,
    EPTQ_INTERNAL_ERROR = 9
} eptq_status;

typedef struct eptq_config eptq_config;
typedef struct eptq_report eptq_report;
typedef struct eptq_table_check eptq_table_check;

EPTQ_API const char* eptq_version(void);
EPTQ_API const char* eptq_last_error(void);
EPTQ_API const char* eptq_status_string(eptq_status status);

/* Statistics */

EPTQ_API eptq_status eptq_kurtosis(const double* values, size_t count, double* out);

typedef struct eptq_edit_counts {
    size_t substitutions;
    size_t deletions;
    size_t insertions;
    size_t reference_words;
} eptq_edit_counts;

/* Word-level edit counts after case and punctuation normalization. */
EPTQ_API eptq_status eptq_word_edits(const char* reference, const char* hypothesis, eptq_edit_counts* out);

/* Corpus WER in [0, inf): total edits over total reference words. */
EPTQ_API eptq_status eptq_corpus_wer(const char* const* references, const char* const* hypotheses, size_t count,
                                     double* out);

/* Deployment cost model */

typedef struct eptq_cost {
    double encoder_weight_mb;
    double encoder_memory_io_mb;
    double decoder_weight_mb;
    double decoder_memory_io_mb;
    double relative_bops_pct;
} eptq_cost;

EPTQ_API size_t eptq_descriptor_count(void);
EPTQ_API eptq_status eptq_descriptor_name(size_t index, const char** name);
EPTQ_API eptq_status eptq_cost_report(const char* model, int weight_bits, int act_bits, eptq_cost* out);

typedef struct eptq_cell {
    const char* name;
    double expected;
    double actual;
    double tolerance;
    int pass;
} eptq_cell;

EPTQ_API eptq_status eptq_table_check_run(eptq_table_check** out);
EPTQ_API size_t eptq_table_check_count(const eptq_table_check* check);
EPTQ_API eptq_status eptq_table_check_cell(const eptq_table_check* check, size_t index, eptq_cell* out);
EPTQ_API int eptq_table_check_passed(const eptq_table_check* check);
EPTQ_API void eptq_table_check_free(eptq_table_check* check);

/* Run configuration */

EPTQ_API eptq_status eptq_config_load(const char* path, eptq_config** out);
/* `base_dir` resolves relative paths inside the JSON; NULL means the working directory. */
EPTQ_API eptq_status eptq_config_parse(const char* json, const char* base_dir, eptq_config** out);
EPTQ_API eptq_status eptq_config_set_report_dir(eptq_config* config, const char* dir);
EPTQ_API eptq_status eptq_config_report_dir(const eptq_config* config, const char** dir);
EPTQ_API size_t eptq_config_sweep_size(const eptq_config* config);
EPTQ_API void eptq_config_free(eptq_config* config);

/* Sweeps */

EPTQ_API eptq_status eptq_sweep_run(const eptq_config* config, eptq_report** out);
EPTQ_API size_t eptq_report_rows(const eptq_report* report);
EPTQ_API eptq_status eptq_report_csv(const eptq_report* report, const char** text);
EPTQ_API eptq_status eptq_report_markdown(const eptq_report* report, const char** text);
/* Writes report.csv, report.md, layers.csv (and traces.csv) into `dir`. */
EPTQ_API eptq_status eptq_report_write(const eptq_report* report, const char* dir);
EPTQ_API void eptq_report_free(eptq_report* report);

/* Quantizes the configured model with sweep entry `entry` and writes the
 * folded graph plus its quantization parameters into `out_dir`. */
EPTQ_API eptq_status eptq_quantize_run(const eptq_config* config, size_t entry, const char* out_dir,
                                       double* total_block_loss);

#ifdef __cplusplus
}
#endif

#endif
