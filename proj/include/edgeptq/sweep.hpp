#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "edgeptq/algorithms.hpp"
#include "edgeptq/calibration.hpp"
#include "edgeptq/model_graph.hpp"

namespace edgeptq {

struct ToyModelSpec {
    std::uint64_t seed = 1;
    std::size_t dim = 16;
    std::size_t layers = 3;
};

/// Gaussian calibration features with a few heavy input channels, for runs
/// without an exported archive.
struct SyntheticCalibSpec {
    std::uint64_t seed = 7;
    std::size_t samples = 8;
    std::size_t tokens = 16;
    std::size_t outlier_channels = 1;
    double outlier_scale = 20.0;
};

CalibArchive synthetic_archive(const SyntheticCalibSpec& spec, std::size_t feature_dim);

struct SweepEntry {
    std::string label;
    int weight_bits = 4;
    int act_bits = 16;  // 32 and 16 both leave activations unquantized
    AlgoConfig algo;
};

struct EvalSpec {
    std::vector<std::string> references;
    std::map<std::string, std::vector<std::string>> hypotheses;  // keyed by entry label
};

struct RunConfig {
    std::optional<std::filesystem::path> model_path;
    std::optional<ToyModelSpec> toy_model;
    std::optional<std::filesystem::path> calib_path;
    std::optional<SyntheticCalibSpec> synthetic_calib;
    std::optional<std::size_t> calib_samples;
    std::uint64_t calib_seed = 0;
    std::optional<std::string> arch;  // builtin descriptor used for cost columns
    std::vector<SweepEntry> sweep;
    std::filesystem::path report_dir = "reports";
    std::optional<EvalSpec> eval;
    bool emit_traces = false;
};

/// Parses and validates a run configuration. Relative paths resolve against
/// `base_dir`. Errors are ConfigError with the offending field path.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct BenchRow {
    std::string label;
    SweepEntry entry;
    double block_loss = 0.0;
    std::optional<double> weight_kurtosis;
    std::optional<double> act_kurtosis;
    double size_mb = 0.0;
    double memory_io_mb = 0.0;
    double rel_bops_pct = 0.0;
    std::optional<double> wer_pct;
};

struct LayerRow {
    std::string label;
    std::string layer;
    double block_loss = 0.0;
    std::optional<double> weight_kurtosis;
    std::optional<double> act_kurtosis;
    std::size_t outliers = 0;
};

struct TraceRow {
    std::string label;
    std::string layer;
    std::string candidate;
    double loss = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::vector<LayerRow> layers;
    std::vector<TraceRow> traces;

    std::string csv() const;
    std::string markdown() const;
    std::string layers_csv() const;
    std::string traces_csv() const;
};

/// Quantized copy of a graph with per-layer results and calibration losses.
struct QuantizedModel {
    LayerGraph folded;  // dequantized weights with channel scales folded out
    std::vector<QuantizedLayer> layers;
    std::vector<double> block_losses;
    std::vector<SearchTrace> traces;
};

LayerGraph load_model(const RunConfig& cfg);
CalibArchive load_calibration(const RunConfig& cfg, std::size_t feature_dim);

/// Quantizes every layer of `graph` with `entry` on the captured trace.
QuantizedModel quantize_model(const LayerGraph& graph, const ActivationTrace& trace, const SweepEntry& entry);

BenchReport run_sweep(const RunConfig& cfg);

/// Writes report.csv, report.md and layers.csv (plus traces.csv when
/// present) into `dir`. Files appear only once every one is fully written.
void write_report(const BenchReport& report, const std::filesystem::path& dir);

/// Writes the folded graph plus quant_params.json describing each layer.
void save_quantized_model(const QuantizedModel& model, const SweepEntry& entry, const std::filesystem::path& dir);

}  // namespace edgeptq
