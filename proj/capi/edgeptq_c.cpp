#include "edgeptq/edgeptq.h"

#include <exception>
#include <filesystem>
#include <new>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgeptq/error.hpp"
#include "edgeptq/metrics.hpp"
#include "edgeptq/model_graph.hpp"
#include "edgeptq/sweep.hpp"

struct eptq_config {
    edgeptq::RunConfig cfg;
    std::string report_dir;
};

struct eptq_report {
    edgeptq::BenchReport report;
    std::string csv;
    std::string markdown;
};

struct eptq_table_check {
    std::vector<edgeptq::CellCheck> cells;
};

namespace {

thread_local std::string g_last_error;

eptq_status status_of(edgeptq::ErrorKind kind) {
    using edgeptq::ErrorKind;
    switch (kind) {
        case ErrorKind::Config: return EPTQ_CONFIG_ERROR;
        case ErrorKind::Format: return EPTQ_FORMAT_ERROR;
        case ErrorKind::Data: return EPTQ_DATA_ERROR;
        case ErrorKind::Io: return EPTQ_IO_ERROR;
        case ErrorKind::Shape: return EPTQ_SHAPE_ERROR;
        case ErrorKind::Conditioning: return EPTQ_CONDITIONING_ERROR;
        case ErrorKind::UndefinedStatistic: return EPTQ_UNDEFINED_STATISTIC;
    }
    return EPTQ_INTERNAL_ERROR;
}

eptq_status invalid(const char* what) {
    g_last_error = what;
    return EPTQ_INVALID_ARGUMENT;
}

template <typename F>
eptq_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return EPTQ_OK;
    } catch (const edgeptq::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        g_last_error = e.what();
        return EPTQ_IO_ERROR;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return EPTQ_INTERNAL_ERROR;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return EPTQ_INTERNAL_ERROR;
    } catch (...) {
        g_last_error = "unknown error";
        return EPTQ_INTERNAL_ERROR;
    }
}

}  // namespace

extern "C" {

const char* eptq_version(void) { return "0.1.0"; }

const char* eptq_last_error(void) { return g_last_error.c_str(); }

const char* eptq_status_string(eptq_status status) {
    switch (status) {
        case EPTQ_OK: return "ok";
        case EPTQ_INVALID_ARGUMENT: return "invalid argument";
        case EPTQ_CONFIG_ERROR: return "configuration error";
        case EPTQ_FORMAT_ERROR: return "format error";
        case EPTQ_DATA_ERROR: return "data error";
        case EPTQ_IO_ERROR: return "I/O error";
        case EPTQ_SHAPE_ERROR: return "shape error";
        case EPTQ_CONDITIONING_ERROR: return "conditioning error";
        case EPTQ_UNDEFINED_STATISTIC: return "undefined statistic";
        case EPTQ_INTERNAL_ERROR: return "internal error";
    }
    return "unknown status";
}

eptq_status eptq_kurtosis(const double* values, size_t count, double* out) {
    if (!out || (!values && count > 0)) return invalid("null argument");
    return guarded([&] { *out = edgeptq::kurtosis({values, count}); });
}

eptq_status eptq_word_edits(const char* reference, const char* hypothesis, eptq_edit_counts* out) {
    if (!reference || !hypothesis || !out) return invalid("null argument");
    return guarded([&] {
        const auto ref = edgeptq::normalize_words(reference);
        const auto hyp = edgeptq::normalize_words(hypothesis);
        const auto e = edgeptq::word_edits(ref, hyp);
        *out = {e.substitutions, e.deletions, e.insertions, ref.size()};
    });
}

eptq_status eptq_corpus_wer(const char* const* references, const char* const* hypotheses, size_t count,
                            double* out) {
    if (!out || ((!references || !hypotheses) && count > 0)) return invalid("null argument");
    for (size_t i = 0; i < count; ++i) {
        if (!references[i] || !hypotheses[i]) return invalid("null transcript");
    }
    return guarded([&] {
        size_t edits = 0, words = 0;
        for (size_t i = 0; i < count; ++i) {
            const auto ref = edgeptq::normalize_words(references[i]);
            edits += edgeptq::word_edits(ref, edgeptq::normalize_words(hypotheses[i])).total();
            words += ref.size();
        }
        if (words == 0) throw edgeptq::ConfigError("WER needs at least one reference word");
        *out = static_cast<double>(edits) / static_cast<double>(words);
    });
}

size_t eptq_descriptor_count(void) { return edgeptq::builtin_descriptors().size(); }

eptq_status eptq_descriptor_name(size_t index, const char** name) {
    if (!name) return invalid("null argument");
    const auto& all = edgeptq::builtin_descriptors();
    if (index >= all.size()) return invalid("descriptor index out of range");
    *name = all[index].name.c_str();
    return EPTQ_OK;
}

eptq_status eptq_cost_report(const char* model, int weight_bits, int act_bits, eptq_cost* out) {
    if (!model || !out) return invalid("null argument");
    return guarded([&] {
        const auto r = edgeptq::cost_report(edgeptq::find_descriptor(model), {weight_bits, act_bits});
        *out = {r.encoder.weight_size_mb, r.encoder.memory_io_mb, r.decoder.weight_size_mb, r.decoder.memory_io_mb,
                r.relative_bops_pct};
    });
}

eptq_status eptq_table_check_run(eptq_table_check** out) {
    if (!out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] { *out = new eptq_table_check{edgeptq::table8_check()}; });
}

size_t eptq_table_check_count(const eptq_table_check* check) { return check ? check->cells.size() : 0; }

eptq_status eptq_table_check_cell(const eptq_table_check* check, size_t index, eptq_cell* out) {
    if (!check || !out) return invalid("null argument");
    if (index >= check->cells.size()) return invalid("cell index out of range");
    const auto& c = check->cells[index];
    *out = {c.cell.c_str(), c.expected, c.actual, c.tolerance, c.pass ? 1 : 0};
    return EPTQ_OK;
}

int eptq_table_check_passed(const eptq_table_check* check) {
    if (!check || check->cells.empty()) return 0;
    for (const auto& c : check->cells) {
        if (!c.pass) return 0;
    }
    return 1;
}

void eptq_table_check_free(eptq_table_check* check) { delete check; }

eptq_status eptq_config_load(const char* path, eptq_config** out) {
    if (!path || !out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] {
        auto cfg = edgeptq::load_run_config(path);
        const std::string dir = cfg.report_dir.string();
        *out = new eptq_config{std::move(cfg), dir};
    });
}

eptq_status eptq_config_parse(const char* json, const char* base_dir, eptq_config** out) {
    if (!json || !out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(json);
        } catch (const nlohmann::json::exception& e) {
            throw edgeptq::ConfigError(std::string("config: ") + e.what());
        }
        auto cfg = edgeptq::parse_run_config(j, base_dir ? std::filesystem::path(base_dir) : std::filesystem::path());
        const std::string dir = cfg.report_dir.string();
        *out = new eptq_config{std::move(cfg), dir};
    });
}

eptq_status eptq_config_set_report_dir(eptq_config* config, const char* dir) {
    if (!config || !dir) return invalid("null argument");
    if (!*dir) return invalid("report directory must not be empty");
    config->cfg.report_dir = dir;
    config->report_dir = dir;
    return EPTQ_OK;
}

eptq_status eptq_config_report_dir(const eptq_config* config, const char** dir) {
    if (!config || !dir) return invalid("null argument");
    *dir = config->report_dir.c_str();
    return EPTQ_OK;
}

size_t eptq_config_sweep_size(const eptq_config* config) { return config ? config->cfg.sweep.size() : 0; }

void eptq_config_free(eptq_config* config) { delete config; }

eptq_status eptq_sweep_run(const eptq_config* config, eptq_report** out) {
    if (!config || !out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] {
        auto report = edgeptq::run_sweep(config->cfg);
        std::string csv = report.csv();
        std::string md = report.markdown();
        *out = new eptq_report{std::move(report), std::move(csv), std::move(md)};
    });
}

size_t eptq_report_rows(const eptq_report* report) { return report ? report->report.rows.size() : 0; }

eptq_status eptq_report_csv(const eptq_report* report, const char** text) {
    if (!report || !text) return invalid("null argument");
    *text = report->csv.c_str();
    return EPTQ_OK;
}

eptq_status eptq_report_markdown(const eptq_report* report, const char** text) {
    if (!report || !text) return invalid("null argument");
    *text = report->markdown.c_str();
    return EPTQ_OK;
}

eptq_status eptq_report_write(const eptq_report* report, const char* dir) {
    if (!report || !dir) return invalid("null argument");
    return guarded([&] { edgeptq::write_report(report->report, dir); });
}

void eptq_report_free(eptq_report* report) { delete report; }

eptq_status eptq_quantize_run(const eptq_config* config, size_t entry, const char* out_dir,
                              double* total_block_loss) {
    if (!config || !out_dir) return invalid("null argument");
    if (entry >= config->cfg.sweep.size()) return invalid("sweep entry index out of range");
    return guarded([&] {
        const auto& cfg = config->cfg;
        const auto graph = edgeptq::load_model(cfg);
        const auto calib = edgeptq::load_calibration(cfg, graph.input_dim());
        const auto trace = edgeptq::capture_trace(graph, calib);
        const auto model = edgeptq::quantize_model(graph, trace, cfg.sweep[entry]);
        edgeptq::save_quantized_model(model, cfg.sweep[entry], out_dir);
        if (total_block_loss) {
            double sum = 0.0;
            for (double l : model.block_losses) sum += l;
            *total_block_loss = sum;
        }
    });
}

}  // extern "C"
