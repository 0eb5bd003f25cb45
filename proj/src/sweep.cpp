#include "edgeptq/sweep.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "edgeptq/error.hpp"
#include "edgeptq/metrics.hpp"
#include "edgeptq/random.hpp"
#include "edgeptq/tensor_io.hpp"

namespace edgeptq {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration parsing

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
            fail(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
        }
    }
}

const json& require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    return j;
}

template <typename T>
std::optional<T> optional_field(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    const std::string field = path.empty() ? key : path + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(field, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(field, "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (v.get<std::int64_t>() < 0) fail(field, "expected a non-negative integer");
        }
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(field, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(field, "expected a string");
    }
    return v.get<T>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

std::vector<std::string> transcripts(const json& v, const std::string& path, const fs::path& base) {
    if (v.is_string()) return read_lines(resolve(base, v.get<std::string>()));
    if (!v.is_array()) fail(path, "expected a list of transcripts or a file path");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) fail(path + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

SweepEntry parse_entry(const json& j, const std::string& path, std::size_t index) {
    require_object(j, path);
    reject_unknown(j, path,
                   {"label", "method", "weight_bits", "act_bits", "weight_granularity", "group_size", "act_granularity",
                    "weight_symmetric", "act_symmetric", "smooth_alpha", "awq_grid_steps", "awq_clip", "gptq_damping",
                    "outlier_fraction", "search_budget"});
    SweepEntry e;
    auto method = optional_field<std::string>(j, "method", path);
    if (!method) fail(path + ".method", "required");
    try {
        e.algo.method = method_from_string(*method);
    } catch (const ConfigError& ex) {
        fail(path + ".method", ex.what());
    }
    e.weight_bits = optional_field<int>(j, "weight_bits", path).value_or(4);
    e.act_bits = optional_field<int>(j, "act_bits", path).value_or(16);
    if (e.weight_bits != 2 && e.weight_bits != 3 && e.weight_bits != 4 && e.weight_bits != 8 && e.weight_bits != 16) {
        fail(path + ".weight_bits", "must be one of 2, 3, 4, 8, 16");
    }
    if (e.act_bits != 2 && e.act_bits != 3 && e.act_bits != 4 && e.act_bits != 8 && e.act_bits != 16 &&
        e.act_bits != 32) {
        fail(path + ".act_bits", "must be one of 2, 3, 4, 8, 16, 32");
    }

    auto& ws = e.algo.weight_spec;
    ws.bits = e.weight_bits;
    ws.symmetric = optional_field<bool>(j, "weight_symmetric", path).value_or(true);
    try {
        ws.granularity =
            granularity_from_string(optional_field<std::string>(j, "weight_granularity", path).value_or("per-channel"));
    } catch (const ConfigError& ex) {
        fail(path + ".weight_granularity", ex.what());
    }
    if (auto g = optional_field<std::size_t>(j, "group_size", path)) ws.group_size = *g;

    auto& as = e.algo.act_spec;
    as.bits = std::min(e.act_bits, 16);
    as.symmetric = optional_field<bool>(j, "act_symmetric", path).value_or(true);
    try {
        as.granularity =
            granularity_from_string(optional_field<std::string>(j, "act_granularity", path).value_or("per-tensor"));
    } catch (const ConfigError& ex) {
        fail(path + ".act_granularity", ex.what());
    }

    auto& a = e.algo;
    a.smooth_alpha = optional_field<double>(j, "smooth_alpha", path).value_or(a.smooth_alpha);
    a.awq_grid_steps = optional_field<int>(j, "awq_grid_steps", path).value_or(a.awq_grid_steps);
    a.awq_clip = optional_field<bool>(j, "awq_clip", path).value_or(a.awq_clip);
    a.gptq_damping = optional_field<double>(j, "gptq_damping", path).value_or(a.gptq_damping);
    a.outlier_fraction = optional_field<double>(j, "outlier_fraction", path).value_or(a.outlier_fraction);
    a.search_budget = optional_field<int>(j, "search_budget", path).value_or(a.search_budget);
    try {
        a.validate();
    } catch (const ConfigError& ex) {
        fail(path, ex.what());
    }

    e.label = optional_field<std::string>(j, "label", path)
                  .value_or(std::string(to_string(a.method)) + "-w" + std::to_string(e.weight_bits) + "a" +
                            std::to_string(e.act_bits) + "-" + std::to_string(index));
    return e;
}

}  // namespace

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
    require_object(j, "config");
    reject_unknown(j, "", {"model", "calibration", "arch", "sweep", "report_dir", "eval", "emit_traces"});
    RunConfig cfg;

    if (!j.contains("model")) fail("model", "required");
    const json& model = require_object(j.at("model"), "model");
    reject_unknown(model, "model", {"path", "toy"});
    if (model.contains("path") == model.contains("toy")) fail("model", "give exactly one of 'path' or 'toy'");
    if (auto p = optional_field<std::string>(model, "path", "model")) cfg.model_path = resolve(base_dir, *p);
    if (model.contains("toy")) {
        const json& toy = require_object(model.at("toy"), "model.toy");
        reject_unknown(toy, "model.toy", {"seed", "dim", "layers"});
        ToyModelSpec t;
        t.seed = optional_field<std::uint64_t>(toy, "seed", "model.toy").value_or(t.seed);
        t.dim = optional_field<std::size_t>(toy, "dim", "model.toy").value_or(t.dim);
        t.layers = optional_field<std::size_t>(toy, "layers", "model.toy").value_or(t.layers);
        if (t.dim < 2) fail("model.toy.dim", "must be at least 2");
        if (t.layers < 1) fail("model.toy.layers", "must be at least 1");
        cfg.toy_model = t;
    }

    if (!j.contains("calibration")) fail("calibration", "required");
    const json& calib = require_object(j.at("calibration"), "calibration");
    reject_unknown(calib, "calibration", {"path", "synthetic", "samples", "seed"});
    if (calib.contains("path") == calib.contains("synthetic")) {
        fail("calibration", "give exactly one of 'path' or 'synthetic'");
    }
    if (auto p = optional_field<std::string>(calib, "path", "calibration")) cfg.calib_path = resolve(base_dir, *p);
    if (calib.contains("synthetic")) {
        const json& syn = require_object(calib.at("synthetic"), "calibration.synthetic");
        reject_unknown(syn, "calibration.synthetic", {"seed", "samples", "tokens", "outlier_channels", "outlier_scale"});
        SyntheticCalibSpec s;
        const std::string p = "calibration.synthetic";
        s.seed = optional_field<std::uint64_t>(syn, "seed", p).value_or(s.seed);
        s.samples = optional_field<std::size_t>(syn, "samples", p).value_or(s.samples);
        s.tokens = optional_field<std::size_t>(syn, "tokens", p).value_or(s.tokens);
        s.outlier_channels = optional_field<std::size_t>(syn, "outlier_channels", p).value_or(s.outlier_channels);
        s.outlier_scale = optional_field<double>(syn, "outlier_scale", p).value_or(s.outlier_scale);
        if (s.samples == 0) fail(p + ".samples", "must be positive");
        if (s.tokens == 0) fail(p + ".tokens", "must be positive");
        cfg.synthetic_calib = s;
    }
    if (auto k = optional_field<std::size_t>(calib, "samples", "calibration")) {
        if (*k == 0) fail("calibration.samples", "must be positive");
        cfg.calib_samples = *k;
    }
    cfg.calib_seed = optional_field<std::uint64_t>(calib, "seed", "calibration").value_or(0);

    if (auto a = optional_field<std::string>(j, "arch", "")) {
        try {
            find_descriptor(*a);
        } catch (const ConfigError& ex) {
            fail("arch", ex.what());
        }
        cfg.arch = *a;
    }
    if (auto r = optional_field<std::string>(j, "report_dir", "")) cfg.report_dir = resolve(base_dir, *r);
    cfg.emit_traces = optional_field<bool>(j, "emit_traces", "").value_or(false);

    if (j.contains("sweep")) {
        const json& sweep = j.at("sweep");
        if (!sweep.is_array()) fail("sweep", "expected a list");
        std::set<std::string> labels;
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            const std::string path = "sweep[" + std::to_string(i) + "]";
            auto e = parse_entry(sweep[i], path, i);
            if (!labels.insert(e.label).second) fail(path + ".label", "duplicate label '" + e.label + "'");
            cfg.sweep.push_back(std::move(e));
        }
    }

    if (j.contains("eval")) {
        const json& ev = require_object(j.at("eval"), "eval");
        reject_unknown(ev, "eval", {"references", "hypotheses"});
        if (!ev.contains("references")) fail("eval.references", "required");
        EvalSpec spec;
        spec.references = transcripts(ev.at("references"), "eval.references", base_dir);
        if (ev.contains("hypotheses")) {
            const json& hyp = require_object(ev.at("hypotheses"), "eval.hypotheses");
            for (auto it = hyp.begin(); it != hyp.end(); ++it) {
                const std::string path = "eval.hypotheses." + it.key();
                auto lines = transcripts(it.value(), path, base_dir);
                if (lines.size() != spec.references.size()) {
                    fail(path, "has " + std::to_string(lines.size()) + " transcripts for " +
                                   std::to_string(spec.references.size()) + " references");
                }
                spec.hypotheses.emplace(it.key(), std::move(lines));
            }
        }
        cfg.eval = std::move(spec);
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Execution

CalibArchive synthetic_archive(const SyntheticCalibSpec& spec, std::size_t feature_dim) {
    PortableRng rng(spec.seed);
    std::vector<std::size_t> heavy;
    for (std::size_t c = 0; c < std::min(spec.outlier_channels, feature_dim); ++c) {
        heavy.push_back(rng.below(feature_dim));
    }
    std::vector<Tensor> samples;
    for (std::size_t s = 0; s < spec.samples; ++s) {
        std::vector<double> data(spec.tokens * feature_dim);
        for (double& v : data) v = rng.normal();
        for (std::size_t t = 0; t < spec.tokens; ++t) {
            for (auto c : heavy) data[t * feature_dim + c] *= spec.outlier_scale;
        }
        samples.push_back(Tensor::matrix(spec.tokens, feature_dim, std::move(data)));
    }
    return make_archive(std::move(samples));
}

LayerGraph load_model(const RunConfig& cfg) {
    if (cfg.model_path) return load_graph(*cfg.model_path);
    if (cfg.toy_model) return toy_transformer(cfg.toy_model->seed, cfg.toy_model->dim, cfg.toy_model->layers);
    throw ConfigError("model: no source configured");
}

CalibArchive load_calibration(const RunConfig& cfg, std::size_t feature_dim) {
    CalibArchive archive = cfg.calib_path ? load_archive(*cfg.calib_path)
                                          : synthetic_archive(cfg.synthetic_calib.value_or(SyntheticCalibSpec{}),
                                                              feature_dim);
    if (archive.size() > 0 && archive.feature_dim() != feature_dim) {
        throw ConfigError("calibration: feature dim " + std::to_string(archive.feature_dim()) +
                          " does not match model input " + std::to_string(feature_dim));
    }
    if (cfg.calib_samples) archive = sample_subset(archive, *cfg.calib_samples, cfg.calib_seed);
    return archive;
}

namespace {

std::optional<double> try_kurtosis(std::span<const double> v) {
    try {
        return kurtosis(v);
    } catch (const UndefinedStatisticError&) {
        return std::nullopt;
    }
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::string fmt(const std::optional<double>& v, int digits) { return v ? format_fixed(*v, digits) : "NA"; }

std::string granularity_label(const QuantSpec& s) {
    std::string out(to_string(s.granularity));
    if (s.group_size) out += "(" + std::to_string(*s.group_size) + ")";
    return out;
}

/// Average corpus traffic of one forward pass, in fp32 MB.
double toy_io_mb(const LayerGraph& graph, const ActivationTrace& trace, std::size_t samples) {
    double elements = 0.0;
    for (std::size_t i = 0; i < graph.size(); ++i) {
        for (const auto& batch : trace.layers[i]) {
            elements += static_cast<double>(batch.rows()) *
                        static_cast<double>(graph.layers()[i].weight.cols() + graph.layers()[i].weight.rows());
        }
    }
    const double weights = static_cast<double>(graph.parameter_count());
    return 4.0 * (weights + elements / static_cast<double>(samples)) / 1e6;
}

}  // namespace

QuantizedModel quantize_model(const LayerGraph& graph, const ActivationTrace& trace, const SweepEntry& entry) {
    if (trace.layers.size() != graph.size()) throw ShapeError("trace does not cover every layer");
    QuantizedModel out;
    std::vector<Tensor> folded;
    for (std::size_t i = 0; i < graph.size(); ++i) {
        const Tensor& w = graph.layers()[i].weight;
        const Tensor x = trace.stacked(i);
        SearchTrace candidates;
        QuantizedLayer q = quantize_layer(w, x, entry.algo, &candidates);
        out.block_losses.push_back(block_loss(x, w, q));
        folded.push_back(folded_weight(q));
        out.layers.push_back(std::move(q));
        out.traces.push_back(std::move(candidates));
    }
    out.folded = graph.with_weights(std::move(folded));
    return out;
}

BenchReport run_sweep(const RunConfig& cfg) {
    BenchReport report;
    if (cfg.sweep.empty()) return report;

    const LayerGraph graph = load_model(cfg);
    const CalibArchive calib = load_calibration(cfg, graph.input_dim());
    const ActivationTrace trace = capture_trace(graph, calib);

    for (const auto& entry : cfg.sweep) {
        const QuantizedModel qm = quantize_model(graph, trace, entry);
        BenchRow row;
        row.label = entry.label;
        row.entry = entry;
        std::vector<std::optional<double>> wk, ak;
        for (std::size_t i = 0; i < graph.size(); ++i) {
            const auto& q = qm.layers[i];
            const Tensor w_hat = effective_weight(q);
            const Tensor x_hat = transform_input(trace.stacked(i), q);
            LayerRow lr{entry.label, graph.layers()[i].name, qm.block_losses[i], try_kurtosis(w_hat.data()),
                        try_kurtosis(x_hat.data()), q.outliers.size()};
            row.block_loss += lr.block_loss;
            wk.push_back(lr.weight_kurtosis);
            ak.push_back(lr.act_kurtosis);
            report.layers.push_back(std::move(lr));
            if (cfg.emit_traces) {
                for (const auto& c : qm.traces[i]) {
                    report.traces.push_back({entry.label, graph.layers()[i].name, c.label, c.loss});
                }
            }
        }
        row.weight_kurtosis = mean_of(wk);
        row.act_kurtosis = mean_of(ak);

        const BitConfig bits{entry.weight_bits, entry.act_bits};
        if (cfg.arch) {
            const auto cost = cost_report(find_descriptor(*cfg.arch), bits);
            row.size_mb = cost.encoder.weight_size_mb + cost.decoder.weight_size_mb;
            row.memory_io_mb = cost.encoder.memory_io_mb + cost.decoder.memory_io_mb;
            row.rel_bops_pct = cost.relative_bops_pct;
        } else {
            const double weight_mb = 4.0 * static_cast<double>(graph.parameter_count()) / 1e6;
            row.size_mb = weight_size_mb(weight_mb, bits.weight_bits);
            row.memory_io_mb = memory_io_mb(toy_io_mb(graph, trace, calib.size()), weight_mb, bits);
            row.rel_bops_pct = relative_bops_pct(bits);
        }

        if (cfg.eval) {
            if (auto it = cfg.eval->hypotheses.find(entry.label); it != cfg.eval->hypotheses.end()) {
                std::size_t edits = 0, words = 0;
                for (std::size_t u = 0; u < cfg.eval->references.size(); ++u) {
                    const auto ref = normalize_words(cfg.eval->references[u]);
                    const auto hyp = normalize_words(it->second[u]);
                    edits += word_edits(ref, hyp).total();
                    words += ref.size();
                }
                if (words == 0) throw ConfigError("eval.references: no reference words");
                row.wer_pct = 100.0 * static_cast<double>(edits) / static_cast<double>(words);
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kColumns[] = {"label",        "method",       "w_bits",          "a_bits",
                                    "w_granularity", "a_granularity", "w_symmetric",     "a_symmetric",
                                    "block_loss",   "weight_kurtosis", "act_kurtosis",  "size_mb",
                                    "memory_io_mb", "rel_bops_pct", "wer_pct"};

std::vector<std::string> cells(const BenchRow& r) {
    const auto& a = r.entry.algo;
    return {r.label,
            std::string(to_string(a.method)),
            std::to_string(r.entry.weight_bits),
            std::to_string(r.entry.act_bits),
            granularity_label(a.weight_spec),
            granularity_label(a.act_spec),
            a.weight_spec.symmetric ? "sym" : "asym",
            a.act_spec.symmetric ? "sym" : "asym",
            format_fixed(r.block_loss, 4),
            fmt(r.weight_kurtosis, 4),
            fmt(r.act_kurtosis, 4),
            format_fixed(r.size_mb, 2),
            format_fixed(r.memory_io_mb, 2),
            format_fixed(r.rel_bops_pct, 2),
            fmt(r.wer_pct, 2)};
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void join_csv(std::ostringstream& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_escape(row[i]);
    out << '\n';
}

}  // namespace

std::string BenchReport::csv() const {
    std::ostringstream out;
    join_csv(out, {std::begin(kColumns), std::end(kColumns)});
    for (const auto& r : rows) join_csv(out, cells(r));
    return out.str();
}

std::string BenchReport::markdown() const {
    std::ostringstream out;
    out << "|";
    for (const char* c : kColumns) out << ' ' << c << " |";
    out << "\n|";
    for (std::size_t i = 0; i < std::size(kColumns); ++i) out << "---|";
    out << '\n';
    for (const auto& r : rows) {
        out << "|";
        for (const auto& c : cells(r)) out << ' ' << c << " |";
        out << '\n';
    }
    return out.str();
}

std::string BenchReport::layers_csv() const {
    std::ostringstream out;
    out << "label,layer,block_loss,weight_kurtosis,act_kurtosis,outliers\n";
    for (const auto& l : layers) {
        join_csv(out, {l.label, l.layer, format_fixed(l.block_loss, 4), fmt(l.weight_kurtosis, 4),
                       fmt(l.act_kurtosis, 4), std::to_string(l.outliers)});
    }
    return out.str();
}

std::string BenchReport::traces_csv() const {
    std::ostringstream out;
    out << "label,layer,candidate,loss\n";
    for (const auto& t : traces) join_csv(out, {t.label, t.layer, t.candidate, format_fixed(t.loss, 4)});
    return out.str();
}

namespace {

/// Writes each file to a hidden temporary, then renames them all into place.
void write_files_atomically(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<fs::path> temps;
    try {
        for (const auto& [name, body] : files) {
            const fs::path tmp = dir / ("." + name + ".tmp");
            temps.push_back(tmp);
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot write " + tmp.string());
            out << body;
            out.close();
            if (!out) throw IoError("short write to " + tmp.string());
        }
        for (std::size_t i = 0; i < files.size(); ++i) fs::rename(temps[i], dir / files[i].first);
    } catch (...) {
        for (const auto& t : temps) fs::remove(t, ec);
        throw;
    }
}

}  // namespace

void write_report(const BenchReport& report, const fs::path& dir) {
    std::vector<std::pair<std::string, std::string>> files{
        {"report.csv", report.csv()}, {"report.md", report.markdown()}, {"layers.csv", report.layers_csv()}};
    if (!report.traces.empty()) files.emplace_back("traces.csv", report.traces_csv());
    write_files_atomically(dir, files);
}

void save_quantized_model(const QuantizedModel& model, const SweepEntry& entry, const fs::path& dir) {
    fs::create_directories(dir);
    save_graph(model.folded, dir / "graph.json");
    json layers = json::array();
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& q = model.layers[i];
        const auto& p = q.weight_q.params;
        json l{
            {"name", model.folded.layers()[i].name},
            {"block_loss", model.block_losses[i]},
            {"weight_granularity", std::string(to_string(p.spec.granularity))},
            {"scales", p.scales},
            {"zero_points", p.zero_points},
            {"codes", q.weight_q.codes},
        };
        json outliers = json::array();
        for (const auto& o : q.outliers) outliers.push_back({{"index", o.index}, {"value", o.value}});
        l["outliers"] = std::move(outliers);
        if (q.channel_scales) l["channel_scales"] = *q.channel_scales;
        if (q.act_params) {
            l["act_scales"] = q.act_params->scales;
            l["act_zero_points"] = q.act_params->zero_points;
        }
        layers.push_back(std::move(l));
    }
    json manifest{{"label", entry.label},
                  {"method", std::string(to_string(entry.algo.method))},
                  {"weight_bits", entry.weight_bits},
                  {"act_bits", entry.act_bits},
                  {"weight_symmetric", entry.algo.weight_spec.symmetric},
                  {"layers", std::move(layers)}};
    write_files_atomically(dir, {{"quant_params.json", manifest.dump(2) + "\n"}});
}

}  // namespace edgeptq
