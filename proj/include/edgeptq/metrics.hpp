#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgeptq/model_graph.hpp"

namespace edgeptq {

/// Fourth standardized moment with population variance. Throws
/// UndefinedStatisticError for fewer than two values or zero variance.
double kurtosis(std::span<const double> values);

/// Lowercases, strips punctuation (apostrophes inside words survive) and
/// splits on whitespace.
std::vector<std::string> normalize_words(std::string_view text);

struct EditCounts {
    std::size_t substitutions = 0;
    std::size_t deletions = 0;
    std::size_t insertions = 0;
    std::size_t total() const noexcept { return substitutions + deletions + insertions; }
};

/// Minimal word-level Levenshtein alignment with unit costs.
EditCounts word_edits(std::span<const std::string> reference, std::span<const std::string> hypothesis);

/// Edits / |reference|; may exceed 1. Throws ConfigError on an empty reference.
double wer(std::span<const std::string> reference, std::span<const std::string> hypothesis);

struct BitConfig {
    int weight_bits = 32;
    int act_bits = 32;
    void validate() const;  // both in {2, 3, 4, 8, 16, 32}
};

double weight_size_mb(double fp32_mb, int weight_bits);

/// Weights scale by weight_bits / 32, the remaining activation traffic by
/// act_bits / 32. Throws ConfigError if io < weights.
double memory_io_mb(double fp32_io_mb, double fp32_weight_mb, const BitConfig& cfg);

double relative_bops_pct(const BitConfig& cfg);

struct ComponentCost {
    double weight_size_mb = 0.0;
    double memory_io_mb = 0.0;
};

struct CostReport {
    std::string model;
    BitConfig bits;
    ComponentCost encoder;
    ComponentCost decoder;
    double relative_bops_pct = 0.0;
};

CostReport cost_report(const ArchDescriptor& desc, const BitConfig& cfg);

/// Rounds half away from zero to `digits` decimals, the convention of the
/// published tables.
double round_to(double value, int digits);

/// Fixed-point text after round_to.
std::string format_fixed(double value, int digits);

/// Cost rows serialized in table order:
/// model, bits w/a, enc weight, enc I/O, dec weight, dec I/O, rel BOPs.
std::string cost_table_csv(std::span<const CostReport> rows);
std::string cost_table_markdown(std::span<const CostReport> rows);

/// One published derived cell and its recomputed value.
struct CellCheck {
    std::string cell;  // e.g. "whisper-tiny w4/a8 encoder memory_io_mb"
    double expected = 0.0;
    double actual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Recomputes every non-baseline cell of the published cost table
/// (5 models x 4 bit configs x {weight size, memory I/O} per component plus
/// relative BOPs) from `descriptors`, matched by name.
std::vector<CellCheck> table8_check(std::span<const ArchDescriptor> descriptors);
std::vector<CellCheck> table8_check();

/// The four published bit configurations: w4/a8, w4/a16, w8/a8, w8/a16.
std::span<const BitConfig> table8_bit_configs();

}  // namespace edgeptq
