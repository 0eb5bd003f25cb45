#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "../linalg.hpp"
#include "edgeptq/error.hpp"
#include "internal.hpp"

namespace edgeptq {

namespace {

constexpr struct {
    Method method;
    std::string_view name;
} kMethodNames[] = {
    {Method::RTN, "RTN"},           {Method::SmoothQuant, "SmoothQuant"}, {Method::AWQ, "AWQ"},
    {Method::OmniQuant, "OmniQuant"}, {Method::GPTQ, "GPTQ"},             {Method::TesseraQ, "TesseraQ"},
    {Method::QUIK, "QUIK"},         {Method::SpQR, "SpQR"},
};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

std::string_view to_string(Method m) {
    for (const auto& e : kMethodNames) {
        if (e.method == m) return e.name;
    }
    return "?";
}

Method method_from_string(std::string_view s) {
    const auto key = lower(s);
    for (const auto& e : kMethodNames) {
        if (lower(e.name) == key) return e.method;
    }
    throw ConfigError("unknown method '" + std::string(s) + "'");
}

void AlgoConfig::validate() const {
    try {
        weight_spec.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("weight_spec: ") + e.what());
    }
    try {
        act_spec.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("act_spec: ") + e.what());
    }
    if (weight_spec.granularity == Granularity::PerToken) {
        throw ConfigError("weight_spec: per-token granularity is for activations");
    }
    if (act_spec.granularity != Granularity::PerTensor && act_spec.granularity != Granularity::PerToken) {
        throw ConfigError("act_spec: activations support per-tensor or per-token granularity");
    }
    if (!(smooth_alpha >= 0.0 && smooth_alpha <= 1.0)) throw ConfigError("smooth_alpha must lie in [0, 1]");
    if (awq_grid_steps < 0) throw ConfigError("awq_grid_steps must be non-negative");
    if (!(gptq_damping > 0.0)) throw ConfigError("gptq_damping must be positive");
    if (!(outlier_fraction > 0.0 && outlier_fraction <= 0.01)) {
        throw ConfigError("outlier_fraction must lie in (0, 0.01]");
    }
    if (search_budget < 1) throw ConfigError("search_budget must be positive");
}

Tensor effective_weight(const QuantizedLayer& layer) {
    Tensor w = dequantize(layer.weight_q);
    for (const auto& o : layer.outliers) w[o.index] = o.value;
    return w;
}

Tensor folded_weight(const QuantizedLayer& layer) {
    Tensor w = effective_weight(layer);
    if (!layer.channel_scales) return w;
    return detail::divide_columns(w, *layer.channel_scales);
}

Tensor transform_input(const Tensor& x, const QuantizedLayer& layer) {
    Tensor xs = layer.channel_scales ? detail::divide_columns(x, *layer.channel_scales) : x;
    const auto& spec = layer.act_spec;
    if (spec.bits >= 16) return xs;
    if (spec.granularity == Granularity::PerToken) {
        return fake_quantize(xs, compute_qparams(xs, spec, AxisRole::TokenRows));
    }
    if (layer.act_params && layer.act_params->partition_count() == 1) {
        QuantParams p = *layer.act_params;
        p.shape = xs.shape();
        p.partitions = {{0, xs.size()}};
        return fake_quantize(xs, p);
    }
    return fake_quantize(xs, compute_qparams(xs, spec, AxisRole::TokenRows));
}

double block_loss(const Tensor& x, const Tensor& weight, const QuantizedLayer& layer) {
    if (x.cols() != weight.cols()) {
        throw ShapeError("block_loss: activation width " + std::to_string(x.cols()) + " vs weight input dim " +
                         std::to_string(weight.cols()));
    }
    if (weight.shape() != layer.weight_q.params.shape) {
        throw ShapeError("block_loss: weight " + shape_to_string(weight.shape()) + " vs quantized " +
                         shape_to_string(layer.weight_q.params.shape));
    }
    const Tensor reference = detail::matmul_nt(x, weight);
    const Tensor approx = detail::matmul_nt(transform_input(x, layer), effective_weight(layer));
    return detail::squared_distance(reference.data(), approx.data());
}

std::size_t outlier_budget(double fraction, std::size_t elements) {
    // Guard against 0.01 * 100 landing a hair above 1.
    const double raw = fraction * static_cast<double>(elements);
    return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

QuantizedLayer rtn(const Tensor& weight, const AlgoConfig& cfg) {
    cfg.validate();
    QuantizedLayer out;
    out.weight_q = quantize(weight, compute_qparams(weight, cfg.weight_spec, AxisRole::WeightRows));
    out.act_spec = cfg.act_spec;
    return out;
}

QuantizedLayer rtn(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg) {
    detail::check_calibration(weight, calib);
    return quantize_with_scales(weight, calib, cfg, std::nullopt);
}

std::vector<double> smoothing_scales(const Tensor& weight, const Tensor& calib, double alpha) {
    detail::check_calibration(weight, calib);
    const auto xmax = detail::column_max_abs(calib);
    const auto wmax = detail::column_max_abs(weight);
    std::vector<double> s(weight.cols(), 1.0);
    for (std::size_t j = 0; j < s.size(); ++j) {
        if (xmax[j] == 0.0 || wmax[j] == 0.0) continue;
        const double v = std::pow(xmax[j], alpha) / std::pow(wmax[j], 1.0 - alpha);
        if (std::isfinite(v) && v > 0.0) s[j] = v;
    }
    return s;
}

QuantizedLayer quantize_with_scales(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg,
                                    std::optional<std::vector<double>> scales) {
    cfg.validate();
    detail::check_calibration(weight, calib);
    QuantizedLayer out;
    const Tensor ws = scales ? detail::scale_columns(weight, *scales) : weight;
    out.weight_q = quantize(ws, compute_qparams(ws, cfg.weight_spec, AxisRole::WeightRows));
    out.act_spec = cfg.act_spec;
    if (cfg.act_spec.bits < 16) {
        const Tensor xs = scales ? detail::divide_columns(calib, *scales) : calib;
        out.act_params = compute_qparams(xs, cfg.act_spec, AxisRole::TokenRows);
    }
    out.channel_scales = std::move(scales);
    return out;
}

QuantizedLayer quantize_layer(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg,
                              SearchTrace* trace) {
    switch (cfg.method) {
        case Method::RTN: return rtn(weight, calib, cfg);
        case Method::SmoothQuant: return smoothquant(weight, calib, cfg);
        case Method::AWQ: return awq(weight, calib, cfg, trace);
        case Method::OmniQuant: return omniquant(weight, calib, cfg, trace);
        case Method::GPTQ: return gptq(weight, calib, cfg);
        case Method::TesseraQ: return tesseraq(weight, calib, cfg, trace);
        case Method::QUIK: return hybrid_outlier(weight, calib, cfg, HybridVariant::QUIK);
        case Method::SpQR: return hybrid_outlier(weight, calib, cfg, HybridVariant::SpQR);
    }
    throw ConfigError("unhandled method");
}

namespace detail {

QuantParams compute_qparams_clipped(const Tensor& tensor, const QuantSpec& spec, AxisRole role,
                                    std::span<const double> gamma, std::span<const double> beta) {
    QuantParams p;
    p.spec = spec;
    p.shape = tensor.shape();
    p.partitions = partition(tensor, spec, role);
    const auto n = p.partitions.size();
    if ((gamma.size() != 1 && gamma.size() != n) || (beta.size() != 1 && beta.size() != n)) {
        throw ShapeError("clip ratios must be given once or per partition");
    }
    const auto data = tensor.data();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& part = p.partitions[i];
        auto [lo, hi] = std::minmax_element(data.begin() + part.begin, data.begin() + part.end);
        const double g = gamma[gamma.size() == 1 ? 0 : i];
        const double b = beta[beta.size() == 1 ? 0 : i];
        auto sz = scale_zero_from_range(b * *lo, g * *hi, spec);
        p.scales.push_back(sz.scale);
        p.zero_points.push_back(sz.zero_point);
    }
    return p;
}

Tensor scale_columns(const Tensor& m, std::span<const double> s) {
    if (s.size() != m.cols()) throw ShapeError("scale vector length does not match column count");
    Tensor out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) out.at(r, c) *= s[c];
    }
    return out;
}

Tensor divide_columns(const Tensor& m, std::span<const double> s) {
    if (s.size() != m.cols()) throw ShapeError("scale vector length does not match column count");
    Tensor out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) out.at(r, c) /= s[c];
    }
    return out;
}

std::vector<double> column_max_abs(const Tensor& m) {
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) out[c] = std::max(out[c], std::abs(m.at(r, c)));
    }
    return out;
}

void check_calibration(const Tensor& weight, const Tensor& calib) {
    if (weight.empty()) throw ShapeError("weight matrix is empty");
    if (calib.empty()) throw ShapeError("calibration activations are empty");
    if (calib.cols() != weight.cols()) {
        throw ShapeError("calibration width " + std::to_string(calib.cols()) + " does not match weight input dim " +
                         std::to_string(weight.cols()));
    }
}

std::vector<double> transpose(const Tensor& m) {
    const std::size_t rows = m.rows(), cols = m.cols();
    std::vector<double> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = m.at(r, c);
    }
    return out;
}

}  // namespace detail

}  // namespace edgeptq
