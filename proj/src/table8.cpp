// Published per-configuration deployment costs of the five edge-ASR models,
// used as the regression target of the cost model.

#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "edgeptq/metrics.hpp"

namespace edgeptq {

namespace {

struct PublishedRow {
    const char* model;
    int weight_bits;
    int act_bits;
    double enc_weight;
    double enc_io;
    double dec_weight;
    double dec_io;
    double bops;
};

constexpr std::array<PublishedRow, 20> kPublished{{
    {"whisper-tiny", 4, 8, 3.82, 263.27, 14.78, 25.61, 3.13},
    {"whisper-tiny", 4, 16, 3.82, 522.72, 14.78, 36.45, 6.25},
    {"whisper-tiny", 8, 8, 7.63, 267.09, 29.55, 40.39, 6.25},
    {"whisper-tiny", 8, 16, 7.63, 526.54, 29.55, 51.22, 12.50},
    {"whisper-base", 4, 8, 9.91, 525.89, 26.00, 47.67, 3.13},
    {"whisper-base", 4, 16, 9.91, 1041.87, 26.00, 69.34, 6.25},
    {"whisper-base", 8, 8, 19.82, 535.80, 52.00, 73.67, 6.25},
    {"whisper-base", 8, 16, 19.82, 1051.78, 52.00, 95.34, 12.50},
    {"whisper-small", 4, 8, 43.50, 1582.90, 76.79, 141.80, 3.13},
    {"whisper-small", 4, 16, 43.50, 3122.30, 76.79, 206.81, 6.25},
    {"whisper-small", 8, 8, 87.00, 1626.40, 153.58, 218.59, 6.25},
    {"whisper-small", 8, 16, 87.00, 3165.80, 153.58, 283.60, 12.50},
    {"moonshine-tiny", 4, 8, 3.84, 44.97, 9.71, 14.08, 3.13},
    {"moonshine-tiny", 4, 16, 3.84, 86.09, 9.71, 18.45, 6.25},
    {"moonshine-tiny", 8, 8, 7.68, 48.81, 19.41, 23.78, 6.25},
    {"moonshine-tiny", 8, 16, 7.68, 89.93, 19.41, 28.16, 12.50},
    {"moonshine-base", 4, 8, 10.08, 82.77, 20.68, 29.10, 3.13},
    {"moonshine-base", 4, 16, 10.08, 155.47, 20.68, 37.52, 6.25},
    {"moonshine-base", 8, 8, 20.15, 92.85, 41.36, 49.78, 6.25},
    {"moonshine-base", 8, 16, 20.15, 165.54, 41.36, 58.20, 12.50},
}};

constexpr double kWeightTolerance = 0.01;
constexpr double kIoTolerance = 0.05;

constexpr std::array<BitConfig, 4> kConfigs{{{4, 8}, {4, 16}, {8, 8}, {8, 16}}};

}  // namespace

std::span<const BitConfig> table8_bit_configs() { return kConfigs; }

std::vector<CellCheck> table8_check(std::span<const ArchDescriptor> descriptors) {
    std::vector<CellCheck> out;
    for (const auto& row : kPublished) {
        const std::string prefix = std::string(row.model) + " w" + std::to_string(row.weight_bits) + "/a" +
                                   std::to_string(row.act_bits) + " ";
        const ArchDescriptor* desc = nullptr;
        for (const auto& d : descriptors) {
            if (d.name == row.model) desc = &d;
        }
        if (!desc) {
            out.push_back({prefix + "descriptor", 0.0, 0.0, 0.0, false});
            continue;
        }
        const BitConfig bits{row.weight_bits, row.act_bits};
        auto add = [&](const char* name, double expected, const std::function<double()>& compute, double tol) {
            double actual = std::numeric_limits<double>::quiet_NaN();
            try {
                actual = compute();
            } catch (const std::exception&) {
            }
            out.push_back({prefix + name, expected, actual, tol, std::abs(actual - expected) <= tol + 1e-9});
        };
        add("encoder weight_size_mb", row.enc_weight,
            [&] { return weight_size_mb(desc->encoder_weight_mb_fp32, bits.weight_bits); }, kWeightTolerance);
        add("encoder memory_io_mb", row.enc_io,
            [&] { return memory_io_mb(desc->encoder_io_mb_fp32, desc->encoder_weight_mb_fp32, bits); }, kIoTolerance);
        add("decoder weight_size_mb", row.dec_weight,
            [&] { return weight_size_mb(desc->decoder_weight_mb_fp32, bits.weight_bits); }, kWeightTolerance);
        add("decoder memory_io_mb", row.dec_io,
            [&] { return memory_io_mb(desc->decoder_io_mb_fp32, desc->decoder_weight_mb_fp32, bits); }, kIoTolerance);
        add("rel_gbops_pct", row.bops, [&] { return round_to(relative_bops_pct(bits), 2); }, 0.0);
    }
    return out;
}

std::vector<CellCheck> table8_check() { return table8_check(builtin_descriptors()); }

}  // namespace edgeptq
