#include "edgeptq/quant_core.hpp"

#include <algorithm>
#include <cmath>

#include "edgeptq/error.hpp"

namespace edgeptq {

std::string_view to_string(Granularity g) {
    switch (g) {
        case Granularity::PerTensor: return "per-tensor";
        case Granularity::PerToken: return "per-token";
        case Granularity::PerChannel: return "per-channel";
        case Granularity::PerGroup: return "per-group";
    }
    return "?";
}

Granularity granularity_from_string(std::string_view s) {
    if (s == "per-tensor") return Granularity::PerTensor;
    if (s == "per-token") return Granularity::PerToken;
    if (s == "per-channel") return Granularity::PerChannel;
    if (s == "per-group") return Granularity::PerGroup;
    throw ConfigError("unknown granularity '" + std::string(s) + "'");
}

void QuantSpec::validate() const {
    if (bits != 2 && bits != 3 && bits != 4 && bits != 8 && bits != 16) {
        throw ConfigError("unsupported bit-width " + std::to_string(bits) + " (expected 2, 3, 4, 8 or 16)");
    }
    if (granularity == Granularity::PerGroup) {
        if (!group_size || *group_size == 0) throw ConfigError("per-group granularity requires a positive group_size");
    } else if (group_size) {
        throw ConfigError("group_size is only valid with per-group granularity");
    }
}

QuantRange quant_range(const QuantSpec& spec) {
    if (spec.symmetric) {
        const std::int32_t half = std::int32_t{1} << (spec.bits - 1);
        return {-half, half - 1};
    }
    return {0, (std::int32_t{1} << spec.bits) - 1};
}

std::vector<IndexRange> partition(const Tensor& tensor, const QuantSpec& spec, AxisRole role) {
    spec.validate();
    if (tensor.empty()) throw ShapeError("cannot partition an empty tensor");
    const std::size_t rows = tensor.rows();
    const std::size_t cols = tensor.cols();
    std::vector<IndexRange> out;

    switch (spec.granularity) {
        case Granularity::PerTensor:
            out.push_back({0, tensor.size()});
            break;
        case Granularity::PerToken:
            if (role != AxisRole::TokenRows) throw ConfigError("per-token granularity applies to activation matrices only");
            for (std::size_t r = 0; r < rows; ++r) out.push_back({r * cols, (r + 1) * cols});
            break;
        case Granularity::PerChannel:
            if (role != AxisRole::WeightRows) throw ConfigError("per-channel granularity applies to weight matrices only");
            for (std::size_t r = 0; r < rows; ++r) out.push_back({r * cols, (r + 1) * cols});
            break;
        case Granularity::PerGroup: {
            if (role != AxisRole::WeightRows) throw ConfigError("per-group granularity applies to weight matrices only");
            const std::size_t g = *spec.group_size;
            if (cols % g != 0) {
                throw ConfigError("group_size " + std::to_string(g) + " does not divide row length " +
                                  std::to_string(cols));
            }
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; c += g) out.push_back({r * cols + c, r * cols + c + g});
            }
            break;
        }
    }
    return out;
}

ScaleZero scale_zero_from_range(double lo, double hi, const QuantSpec& spec) {
    const auto range = quant_range(spec);
    if (lo == hi) {
        // Constant partition: one code step equals the value itself.
        if (lo == 0.0) return {1.0, 0};
        const double scale = std::abs(lo);
        if (spec.symmetric) return {scale, 0};
        return {scale, lo < 0.0 ? 1 : 0};
    }
    if (spec.symmetric) {
        const double amax = std::max(std::abs(lo), std::abs(hi));
        return {amax / range.max, 0};
    }
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
    const double scale = (hi - lo) / static_cast<double>(range.max - range.min);
    const double z = std::clamp(round_half_even(-lo / scale), static_cast<double>(range.min),
                                static_cast<double>(range.max));
    return {scale, static_cast<std::int32_t>(z)};
}

std::size_t QuantParams::partition_of(std::size_t i) const {
    auto it = std::upper_bound(partitions.begin(), partitions.end(), i,
                               [](std::size_t v, const IndexRange& r) { return v < r.end; });
    if (it == partitions.end() || i < it->begin) throw ShapeError("index outside every partition");
    return static_cast<std::size_t>(it - partitions.begin());
}

QuantParams compute_qparams(const Tensor& tensor, const QuantSpec& spec, AxisRole role) {
    QuantParams p;
    p.spec = spec;
    p.shape = tensor.shape();
    p.partitions = partition(tensor, spec, role);
    p.scales.reserve(p.partitions.size());
    p.zero_points.reserve(p.partitions.size());
    const auto data = tensor.data();
    for (const auto& part : p.partitions) {
        auto [lo, hi] = std::minmax_element(data.begin() + part.begin, data.begin() + part.end);
        auto sz = scale_zero_from_range(*lo, *hi, spec);
        p.scales.push_back(sz.scale);
        p.zero_points.push_back(sz.zero_point);
    }
    return p;
}

double round_half_even(double x) {
    const double r = std::round(x);
    if (std::abs(x - std::trunc(x)) == 0.5) return 2.0 * std::round(x / 2.0);
    return r;
}

std::int32_t quantize_value(double x, double scale, std::int32_t zero_point, QuantRange range) {
    const double q = round_half_even(x / scale) + zero_point;
    return static_cast<std::int32_t>(std::clamp(q, static_cast<double>(range.min), static_cast<double>(range.max)));
}

QTensor quantize(const Tensor& tensor, const QuantParams& params) {
    if (tensor.shape() != params.shape) {
        throw ShapeError("quantizer built for " + shape_to_string(params.shape) + " applied to " +
                         shape_to_string(tensor.shape()));
    }
    const auto range = quant_range(params.spec);
    QTensor q;
    q.params = params;
    q.codes.resize(tensor.size());
    for (std::size_t p = 0; p < params.partitions.size(); ++p) {
        const auto& part = params.partitions[p];
        for (std::size_t i = part.begin; i < part.end; ++i) {
            q.codes[i] = quantize_value(tensor[i], params.scales[p], params.zero_points[p], range);
        }
    }
    return q;
}

Tensor dequantize(const QTensor& q) {
    std::vector<double> out(q.codes.size());
    const auto& params = q.params;
    for (std::size_t p = 0; p < params.partitions.size(); ++p) {
        const auto& part = params.partitions[p];
        for (std::size_t i = part.begin; i < part.end; ++i) {
            out[i] = params.scales[p] * static_cast<double>(q.codes[i] - params.zero_points[p]);
        }
    }
    return Tensor(params.shape, std::move(out));
}

Tensor fake_quantize(const Tensor& tensor, const QuantParams& params) {
    return dequantize(quantize(tensor, params));
}

}  // namespace edgeptq
