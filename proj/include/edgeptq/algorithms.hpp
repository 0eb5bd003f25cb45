#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgeptq/quant_core.hpp"
#include "edgeptq/tensor.hpp"

namespace edgeptq {

enum class Method { RTN, SmoothQuant, AWQ, OmniQuant, GPTQ, TesseraQ, QUIK, SpQR };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);  // case-insensitive

struct AlgoConfig {
    Method method = Method::RTN;
    QuantSpec weight_spec{4, true, Granularity::PerChannel, std::nullopt};
    QuantSpec act_spec{16, true, Granularity::PerTensor, std::nullopt};
    double smooth_alpha = 0.8;
    int awq_grid_steps = 20;
    bool awq_clip = false;
    double gptq_damping = 0.01;
    double outlier_fraction = 0.01;
    int search_budget = 64;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// A weight element held at high precision instead of its integer code.
struct Outlier {
    std::size_t index;
    double value;
    bool operator==(const Outlier&) const = default;
};

/// Result of quantizing one linear layer (weight is out x in; the layer
/// computes X * W^T). When `channel_scales` is present the codes encode
/// W * diag(s) and the layer input is divided by s before the activation
/// quantizer.
struct QuantizedLayer {
    QTensor weight_q;
    std::vector<Outlier> outliers;
    QuantSpec act_spec{16, true, Granularity::PerTensor, std::nullopt};
    std::optional<QuantParams> act_params;
    std::optional<std::vector<double>> channel_scales;
};

/// Dequantized codes with outliers restored, in the scaled domain.
Tensor effective_weight(const QuantizedLayer& layer);

/// effective_weight with the channel scales folded back out, so that
/// X * folded^T approximates the original layer output.
Tensor folded_weight(const QuantizedLayer& layer);

/// Input transform applied by the quantized layer: divide by channel scales,
/// then fake-quantize when act_spec has fewer than 16 bits. Per-token
/// quantizers are recomputed for `x`; per-tensor ones reuse act_params when
/// present.
Tensor transform_input(const Tensor& x, const QuantizedLayer& layer);

/// ||X W^T - X_hat W_hat^T||_F^2 with X_hat = transform_input(X).
double block_loss(const Tensor& x, const Tensor& weight, const QuantizedLayer& layer);

/// One evaluated search candidate, recorded for audit.
struct SearchCandidate {
    std::string label;
    double loss;
};
using SearchTrace = std::vector<SearchCandidate>;

QuantizedLayer rtn(const Tensor& weight, const AlgoConfig& cfg);

/// RTN weights plus an activation quantizer calibrated on `calib`.
QuantizedLayer rtn(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg);

/// Per-input-channel migration scales max|X_j|^alpha / max|W_j|^(1-alpha);
/// channels with a zero maximum on either side get 1.
std::vector<double> smoothing_scales(const Tensor& weight, const Tensor& calib, double alpha);

/// Quantizes W * diag(s) and calibrates the activation quantizer on X / s.
QuantizedLayer quantize_with_scales(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg,
                                    std::optional<std::vector<double>> scales);

QuantizedLayer smoothquant(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg);
QuantizedLayer awq(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg, SearchTrace* trace = nullptr);
QuantizedLayer omniquant(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg,
                         SearchTrace* trace = nullptr);
QuantizedLayer gptq(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg);
QuantizedLayer tesseraq(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg,
                        SearchTrace* trace = nullptr);

enum class HybridVariant { QUIK, SpQR };
QuantizedLayer hybrid_outlier(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg,
                              HybridVariant variant);

/// Maximum number of outliers for `elements` weights: ceil(fraction * elements).
std::size_t outlier_budget(double fraction, std::size_t elements);

/// Dispatches on cfg.method.
QuantizedLayer quantize_layer(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg,
                              SearchTrace* trace = nullptr);

}  // namespace edgeptq
