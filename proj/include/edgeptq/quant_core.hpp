#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgeptq/tensor.hpp"

namespace edgeptq {

enum class Granularity { PerTensor, PerToken, PerChannel, PerGroup };

/// How the rows of a tensor are interpreted when partitioning.
enum class AxisRole {
    WeightRows,  // out x in weight matrix, one row per output channel
    TokenRows,   // tokens x features activation matrix
    Whole,
};

std::string_view to_string(Granularity g);
Granularity granularity_from_string(std::string_view s);

/// Configuration of one integer-uniform quantizer.
struct QuantSpec {
    int bits = 8;
    bool symmetric = true;
    Granularity granularity = Granularity::PerTensor;
    std::optional<std::size_t> group_size;

    /// Throws ConfigError on an unsupported bit-width or a group size given
    /// without per-group granularity (or missing with it).
    void validate() const;

    bool operator==(const QuantSpec&) const = default;
};

struct QuantRange {
    std::int32_t min;
    std::int32_t max;
};

/// Signed two's-complement range when symmetric, [0, 2^n - 1] otherwise.
QuantRange quant_range(const QuantSpec& spec);

/// Half-open flat index range [begin, end) over a row-major tensor.
struct IndexRange {
    std::size_t begin;
    std::size_t end;
    std::size_t size() const noexcept { return end - begin; }
    bool operator==(const IndexRange&) const = default;
};

/// Splits `tensor` into the contiguous partitions that each receive one
/// (scale, zero-point) pair. Per-channel and per-group require WeightRows,
/// per-token requires TokenRows; per-group slices each row into runs of
/// `group_size` input features.
std::vector<IndexRange> partition(const Tensor& tensor, const QuantSpec& spec, AxisRole role);

struct ScaleZero {
    double scale;
    std::int32_t zero_point;
};

/// Scale and zero-point for a partition whose observed extremes are
/// `lo <= hi`. Symmetric: scale = max(|lo|, |hi|) / N_max. Asymmetric: the
/// range is widened to include zero, scale = (hi - lo) / (2^n - 1) and
/// z = clip(round(-lo / scale)). When lo == hi the degenerate rule applies:
/// scale = |lo| (1 if lo is zero) with z chosen so the constant decodes
/// exactly.
ScaleZero scale_zero_from_range(double lo, double hi, const QuantSpec& spec);

struct QuantParams {
    QuantSpec spec;
    Shape shape;
    std::vector<IndexRange> partitions;
    std::vector<double> scales;
    std::vector<std::int32_t> zero_points;

    std::size_t partition_count() const noexcept { return partitions.size(); }
    /// Index of the partition containing flat element `i`.
    std::size_t partition_of(std::size_t i) const;
};

QuantParams compute_qparams(const Tensor& tensor, const QuantSpec& spec, AxisRole role);

/// Integer codes plus the parameters that decode them.
struct QTensor {
    std::vector<std::int32_t> codes;
    QuantParams params;
};

/// Rounds half to even.
double round_half_even(double x);

std::int32_t quantize_value(double x, double scale, std::int32_t zero_point, QuantRange range);

QTensor quantize(const Tensor& tensor, const QuantParams& params);
Tensor dequantize(const QTensor& q);

/// quantize followed by dequantize.
Tensor fake_quantize(const Tensor& tensor, const QuantParams& params);

}  // namespace edgeptq
