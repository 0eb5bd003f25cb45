// edgeptq command-line driver. Talks to the toolkit only through the C API.
//
// Precedence for run settings: command-line flags, then EDGEPTQ_REPORT_DIR
// (report directory only), then the JSON config file, then built-in defaults.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "edgeptq/edgeptq.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kReportDirEnv = "EDGEPTQ_REPORT_DIR";

struct CliFailure {
    int code;
};

void check(eptq_status s) {
    if (s != EPTQ_OK) {
        std::cerr << "edgeptq: " << eptq_status_string(s) << ": " << eptq_last_error() << "\n";
        throw CliFailure{s == EPTQ_INVALID_ARGUMENT || s == EPTQ_CONFIG_ERROR ? 2 : 1};
    }
}

[[noreturn]] void usage_error(const std::string& msg) {
    std::cerr << "edgeptq: " << msg << "\n";
    throw CliFailure{2};
}

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", std::round(v * 100.0) / 100.0);
    return buf;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) usage_error("cannot open " + path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

struct RunOverrides {
    std::string config;
    std::string report_dir;
    std::string model;
    std::string calib;
    std::string arch;
    int calib_samples = 0;
    long long calib_seed = -1;
    bool emit_traces = false;
};

void add_run_options(CLI::App* cmd, RunOverrides& o) {
    cmd->add_option("-c,--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    cmd->add_option("--model", o.model, "layer graph JSON (replaces the configured model)");
    cmd->add_option("--calib", o.calib, "calibration archive directory");
    cmd->add_option("--calib-samples", o.calib_samples, "calibration subset size")->check(CLI::PositiveNumber);
    cmd->add_option("--calib-seed", o.calib_seed, "seed for the calibration subset")->check(CLI::NonNegativeNumber);
    cmd->add_option("--arch", o.arch, "builtin descriptor for the cost columns");
    cmd->add_flag("--emit-traces", o.emit_traces, "also write traces.csv with search candidates");
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) usage_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        usage_error(path + ": " + e.what());
    }
}

// Paths given on the command line are relative to the working directory, so
// they are made absolute before the config resolves its own relative paths.
std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

eptq_config* open_config(const RunOverrides& o, json patch_entries = nullptr) {
    json j = load_json(o.config);
    if (!j.is_object()) usage_error(o.config + ": config must be a JSON object");
    if (!o.model.empty()) j["model"] = {{"path", absolute(o.model)}};
    if (!o.calib.empty()) {
        json calib = j.value("calibration", json::object());
        if (!calib.is_object()) calib = json::object();
        calib.erase("synthetic");
        calib["path"] = absolute(o.calib);
        j["calibration"] = calib;
    }
    if (o.calib_samples > 0) j["calibration"]["samples"] = o.calib_samples;
    if (o.calib_seed >= 0) j["calibration"]["seed"] = o.calib_seed;
    if (!o.arch.empty()) j["arch"] = o.arch;
    if (o.emit_traces) j["emit_traces"] = true;
    if (!patch_entries.is_null()) j["sweep"] = std::move(patch_entries);

    const std::string base = fs::absolute(o.config).parent_path().string();
    eptq_config* cfg = nullptr;
    check(eptq_config_parse(j.dump().c_str(), base.c_str(), &cfg));

    std::string report_dir = o.report_dir;
    if (report_dir.empty()) {
        if (const char* env = std::getenv(kReportDirEnv); env && *env) report_dir = env;
    }
    if (!report_dir.empty()) {
        const eptq_status s = eptq_config_set_report_dir(cfg, report_dir.c_str());
        if (s != EPTQ_OK) eptq_config_free(cfg);
        check(s);
    }
    return cfg;
}

int cmd_sweep(const RunOverrides& o, bool print_markdown) {
    eptq_config* cfg = open_config(o);
    eptq_report* report = nullptr;
    const eptq_status s = eptq_sweep_run(cfg, &report);
    if (s != EPTQ_OK) eptq_config_free(cfg);
    check(s);
    const char* dir = nullptr;
    eptq_config_report_dir(cfg, &dir);
    const std::string out_dir = dir;
    const eptq_status w = eptq_report_write(report, out_dir.c_str());
    const char* text = nullptr;
    eptq_report_markdown(report, &text);
    if (print_markdown && w == EPTQ_OK) std::cout << text;
    const size_t rows = eptq_report_rows(report);
    eptq_report_free(report);
    eptq_config_free(cfg);
    check(w);
    std::cerr << "wrote " << rows << " rows to " << out_dir << "\n";
    return 0;
}

struct EntryOverrides {
    std::string label;
    int index = -1;
    std::string method;
    int weight_bits = 0;
    int act_bits = 0;
    std::string weight_granularity;
    int group_size = 0;
    bool asymmetric = false;
};

int cmd_quantize(const RunOverrides& o, const EntryOverrides& e, const std::string& out_dir) {
    json j = load_json(o.config);
    json sweep = j.is_object() && j.contains("sweep") ? j["sweep"] : json::array();
    if (!sweep.is_array()) usage_error("sweep: expected a list");

    json entry = json::object();
    if (!e.label.empty()) {
        bool found = false;
        for (const auto& s : sweep) {
            if (s.is_object() && s.value("label", std::string()) == e.label) {
                entry = s;
                found = true;
            }
        }
        if (!found) usage_error("no sweep entry labelled '" + e.label + "'");
    } else if (e.index >= 0) {
        if (static_cast<std::size_t>(e.index) >= sweep.size()) usage_error("--entry is out of range");
        entry = sweep[e.index];
    } else if (sweep.size() == 1 && e.method.empty()) {
        entry = sweep[0];
    } else if (e.method.empty()) {
        usage_error("select an entry with --label/--entry or give --method");
    }
    if (!e.method.empty()) entry["method"] = e.method;
    if (e.weight_bits) entry["weight_bits"] = e.weight_bits;
    if (e.act_bits) entry["act_bits"] = e.act_bits;
    if (!e.weight_granularity.empty()) entry["weight_granularity"] = e.weight_granularity;
    if (e.group_size) entry["group_size"] = e.group_size;
    if (e.asymmetric) entry["weight_symmetric"] = false;

    eptq_config* cfg = open_config(o, json::array({entry}));
    double loss = 0.0;
    const eptq_status s = eptq_quantize_run(cfg, 0, out_dir.c_str(), &loss);
    eptq_config_free(cfg);
    check(s);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", loss);
    std::cout << "block_loss " << buf << "\nwrote " << out_dir << "\n";
    return 0;
}

int cmd_cost(std::vector<std::string> models, const std::vector<std::string>& bits, const std::string& format) {
    if (models.empty()) {
        for (size_t i = 0; i < eptq_descriptor_count(); ++i) {
            const char* name = nullptr;
            check(eptq_descriptor_name(i, &name));
            models.emplace_back(name);
        }
    }
    std::vector<std::pair<int, int>> configs;
    for (const auto& b : bits) {
        int w = 0, a = 0;
        char tail = 0;
        if (std::sscanf(b.c_str(), "%d/%d%c", &w, &a, &tail) != 2) usage_error("--bits expects W/A, got '" + b + "'");
        configs.emplace_back(w, a);
    }
    if (configs.empty()) configs = {{4, 8}, {4, 16}, {8, 8}, {8, 16}};

    const bool md = format == "md";
    if (md) {
        std::cout << "| Model | # bits w/a | Enc. weight size (MB) | Enc. memory I/O (MB) | Dec. weight size (MB) | "
                     "Dec. memory I/O (MB) | Rel. GBOPs (%) |\n|---|---|---|---|---|---|---|\n";
    } else {
        std::cout << "model,bits_w_a,encoder_weight_mb,encoder_memory_io_mb,decoder_weight_mb,"
                     "decoder_memory_io_mb,rel_gbops_pct\n";
    }
    for (const auto& m : models) {
        for (auto [w, a] : configs) {
            eptq_cost c{};
            check(eptq_cost_report(m.c_str(), w, a, &c));
            const std::vector<std::string> cells{m,
                                                 std::to_string(w) + "/" + std::to_string(a),
                                                 fixed2(c.encoder_weight_mb),
                                                 fixed2(c.encoder_memory_io_mb),
                                                 fixed2(c.decoder_weight_mb),
                                                 fixed2(c.decoder_memory_io_mb),
                                                 fixed2(c.relative_bops_pct)};
            for (size_t i = 0; i < cells.size(); ++i) {
                if (md) {
                    std::cout << (i ? " " : "| ") << cells[i] << " |";
                } else {
                    std::cout << (i ? "," : "") << cells[i];
                }
            }
            std::cout << "\n";
        }
    }
    return 0;
}

std::vector<double> read_values(const std::string& path) {
    std::vector<double> values;
    if (fs::path(path).extension() == ".f32") {
        std::ifstream in(path, std::ios::binary);
        if (!in) usage_error("cannot open " + path);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (bytes.size() % 4 != 0) usage_error(path + ": length is not a multiple of 4 bytes");
        for (size_t i = 0; i < bytes.size(); i += 4) {
            unsigned char b[4];
            std::memcpy(b, &bytes[i], 4);
            const std::uint32_t bits = std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
                                       std::uint32_t(b[3]) << 24;
            float f;
            std::memcpy(&f, &bits, 4);
            values.push_back(f);
        }
        return values;
    }
    std::ifstream in(path);
    if (!in) usage_error("cannot open " + path);
    std::string tok;
    while (in >> tok) {
        for (char& c : tok) {
            if (c == ',') c = ' ';
        }
        std::istringstream parts(tok);
        std::string p;
        while (parts >> p) {
            try {
                size_t used = 0;
                values.push_back(std::stod(p, &used));
                if (used != p.size()) throw std::invalid_argument(p);
            } catch (const std::exception&) {
                usage_error(path + ": not a number: '" + p + "'");
            }
        }
    }
    return values;
}

int cmd_kurtosis(const std::vector<double>& inline_values, const std::string& file) {
    std::vector<double> values = inline_values;
    if (!file.empty()) {
        auto more = read_values(file);
        values.insert(values.end(), more.begin(), more.end());
    }
    double k = 0.0;
    check(eptq_kurtosis(values.data(), values.size(), &k));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", k);
    std::cout << buf << "\n";
    return 0;
}

int cmd_wer(const std::string& ref, const std::string& hyp, const std::string& ref_file, const std::string& hyp_file) {
    std::vector<std::string> refs, hyps;
    if (!ref_file.empty() || !hyp_file.empty()) {
        if (ref_file.empty() || hyp_file.empty()) usage_error("--ref-file and --hyp-file go together");
        refs = read_lines(ref_file);
        hyps = read_lines(hyp_file);
        if (refs.size() != hyps.size()) usage_error("reference and hypothesis files differ in line count");
    } else {
        refs = {ref};
        hyps = {hyp};
    }
    eptq_edit_counts total{};
    for (size_t i = 0; i < refs.size(); ++i) {
        eptq_edit_counts c{};
        check(eptq_word_edits(refs[i].c_str(), hyps[i].c_str(), &c));
        total.substitutions += c.substitutions;
        total.deletions += c.deletions;
        total.insertions += c.insertions;
        total.reference_words += c.reference_words;
    }
    std::vector<const char*> rp, hp;
    for (size_t i = 0; i < refs.size(); ++i) {
        rp.push_back(refs[i].c_str());
        hp.push_back(hyps[i].c_str());
    }
    double w = 0.0;
    check(eptq_corpus_wer(rp.data(), hp.data(), refs.size(), &w));
    std::cout << "wer_pct " << fixed2(100.0 * w) << "\nsubstitutions " << total.substitutions << "\ndeletions "
              << total.deletions << "\ninsertions " << total.insertions << "\nreference_words "
              << total.reference_words << "\n";
    return 0;
}

int cmd_table8(bool quiet) {
    eptq_table_check* check_handle = nullptr;
    check(eptq_table_check_run(&check_handle));
    size_t failed = 0;
    const size_t n = eptq_table_check_count(check_handle);
    for (size_t i = 0; i < n; ++i) {
        eptq_cell c{};
        eptq_table_check_cell(check_handle, i, &c);
        if (!c.pass) ++failed;
        if (!quiet || !c.pass) {
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%s %s expected=%.2f actual=%.4f tol=%.2f", c.pass ? "PASS" : "FAIL",
                          c.name, c.expected, c.actual, c.tolerance);
            std::cout << buf << "\n";
        }
    }
    std::cout << (n - failed) << "/" << n << " cells within tolerance\n";
    const bool ok = eptq_table_check_passed(check_handle) != 0;
    eptq_table_check_free(check_handle);
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"edgeptq: post-training quantization sweeps and deployment cost analysis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(eptq_version()));

    RunOverrides sweep_opts;
    bool print_md = false;
    auto* sweep = app.add_subcommand("sweep", "run every configured quantization entry and write reports");
    add_run_options(sweep, sweep_opts);
    sweep->add_option("-o,--report-dir", sweep_opts.report_dir, "report directory (overrides EDGEPTQ_REPORT_DIR)");
    sweep->add_flag("--print", print_md, "print the Markdown report to stdout");

    RunOverrides quant_opts;
    EntryOverrides entry;
    std::string out_dir;
    auto* quantize = app.add_subcommand("quantize", "quantize the model with one entry and save it");
    add_run_options(quantize, quant_opts);
    quantize->add_option("-o,--out", out_dir, "output directory")->required();
    quantize->add_option("--label", entry.label, "sweep entry to use, by label");
    quantize->add_option("--entry", entry.index, "sweep entry to use, by position")->check(CLI::NonNegativeNumber);
    quantize->add_option("--method", entry.method, "algorithm (rtn, smoothquant, awq, omniquant, gptq, ...)");
    quantize->add_option("--weight-bits", entry.weight_bits, "weight bit width");
    quantize->add_option("--act-bits", entry.act_bits, "activation bit width");
    quantize->add_option("--weight-granularity", entry.weight_granularity, "per-tensor, per-channel or per-group");
    quantize->add_option("--group-size", entry.group_size, "group size for per-group weights");
    quantize->add_flag("--asymmetric", entry.asymmetric, "asymmetric weight quantization");

    std::vector<std::string> cost_models, cost_bits;
    std::string cost_format = "csv";
    auto* cost = app.add_subcommand("cost", "weight size, memory I/O and relative BOPs per bit configuration");
    cost->add_option("-m,--model", cost_models, "descriptor name (repeatable; default all)");
    cost->add_option("-b,--bits", cost_bits, "W/A bit pair such as 4/8 (repeatable)");
    cost->add_option("--format", cost_format, "csv or md")->check(CLI::IsMember({"csv", "md"}));

    std::vector<double> kvalues;
    std::string kfile;
    auto* kurt = app.add_subcommand("kurtosis", "kurtosis of a list of values");
    kurt->add_option("values", kvalues, "values");
    kurt->add_option("-f,--file", kfile, "text file of numbers, or little-endian .f32")->check(CLI::ExistingFile);

    std::string ref, hyp, ref_file, hyp_file;
    auto* wer = app.add_subcommand("wer", "word error rate between transcripts");
    wer->add_option("--ref", ref, "reference transcript");
    wer->add_option("--hyp", hyp, "hypothesis transcript");
    wer->add_option("--ref-file", ref_file, "one reference per line")->check(CLI::ExistingFile);
    wer->add_option("--hyp-file", hyp_file, "one hypothesis per line")->check(CLI::ExistingFile);

    bool quiet = false;
    auto* table8 = app.add_subcommand("table8-check", "recompute the published cost table and compare");
    table8->add_flag("-q,--quiet", quiet, "only list failing cells");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sweep) return cmd_sweep(sweep_opts, print_md);
        if (*quantize) return cmd_quantize(quant_opts, entry, out_dir);
        if (*cost) return cmd_cost(cost_models, cost_bits, cost_format);
        if (*kurt) return cmd_kurtosis(kvalues, kfile);
        if (*wer) return cmd_wer(ref, hyp, ref_file, hyp_file);
        if (*table8) return cmd_table8(quiet);
    } catch (const CliFailure& f) {
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "edgeptq: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
