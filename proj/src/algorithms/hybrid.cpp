// Hybrid precision: a small budget of weights stays at 16 bits, the rest is
// quantized at the configured bit-width.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "../linalg.hpp"
#include "edgeptq/error.hpp"
#include "internal.hpp"

namespace edgeptq {

namespace {

/// Top `budget` indices by descending score, skipping non-positive scores.
/// Ties keep the lower index first.
std::vector<std::size_t> top_scores(const std::vector<double>& score, std::size_t budget) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < score.size(); ++i) {
        if (score[i] > 0.0) idx.push_back(i);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    if (idx.size() > budget) idx.resize(budget);
    return idx;
}

}  // namespace

namespace detail {

std::vector<Outlier> verified_outliers(const Tensor& weight, const Tensor& calib, const QuantizedLayer& layer,
                                       std::span<const std::size_t> candidates, std::span<const double> values) {
    const std::size_t cols = weight.cols(), samples = calib.rows();
    const Tensor x_hat = transform_input(calib, layer);
    const Tensor reference = matmul_nt(calib, weight);
    const Tensor forced = dequantize(layer.weight_q);
    const Tensor approx = matmul_nt(x_hat, forced);

    std::vector<std::vector<double>> residual(weight.rows());
    auto residual_of = [&](std::size_t r) -> std::vector<double>& {
        auto& res = residual[r];
        if (res.empty()) {
            res.resize(samples);
            for (std::size_t s = 0; s < samples; ++s) res[s] = reference.at(s, r) - approx.at(s, r);
        }
        return res;
    };

    std::vector<Outlier> kept;
    for (std::size_t i : candidates) {
        const std::size_t r = i / cols, j = i % cols;
        const double delta = values[i] - forced[i];
        if (delta == 0.0) continue;
        auto& res = residual_of(r);
        double dot = 0.0, norm2 = 0.0;
        for (std::size_t s = 0; s < samples; ++s) {
            dot += x_hat.at(s, j) * res[s];
            norm2 += x_hat.at(s, j) * x_hat.at(s, j);
        }
        const double change = -2.0 * delta * dot + delta * delta * norm2;
        if (!(change < 0.0)) continue;
        for (std::size_t s = 0; s < samples; ++s) res[s] -= delta * x_hat.at(s, j);
        kept.push_back({i, values[i]});
    }
    std::sort(kept.begin(), kept.end(), [](const Outlier& a, const Outlier& b) { return a.index < b.index; });
    return kept;
}

}  // namespace detail

QuantizedLayer hybrid_outlier(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg,
                              HybridVariant variant) {
    cfg.validate();
    detail::check_calibration(weight, calib);
    const std::size_t rows = weight.rows(), cols = weight.cols();
    const std::size_t budget = outlier_budget(cfg.outlier_fraction, weight.size());

    std::vector<double> score(weight.size(), 0.0);
    if (variant == HybridVariant::QUIK) {
        // Activation-weighted magnitude.
        std::vector<double> col_norm(cols, 0.0);
        for (std::size_t s = 0; s < calib.rows(); ++s) {
            for (std::size_t j = 0; j < cols; ++j) col_norm[j] += calib.at(s, j) * calib.at(s, j);
        }
        for (double& v : col_norm) v = std::sqrt(v);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < cols; ++j) score[r * cols + j] = std::abs(weight.at(r, j)) * col_norm[j];
        }
    } else {
        // First-pass RTN error.
        const Tensor first = fake_quantize(weight, compute_qparams(weight, cfg.weight_spec, AxisRole::WeightRows));
        for (std::size_t i = 0; i < weight.size(); ++i) score[i] = std::abs(weight[i] - first[i]);
    }
    const auto candidates = top_scores(score, budget);
    std::vector<bool> kept(weight.size(), false);
    for (auto i : candidates) kept[i] = true;

    QuantizedLayer out = quantize_with_scales(weight, calib, cfg, std::nullopt);
    std::vector<double> values(weight.data().begin(), weight.data().end());
    if (variant == HybridVariant::QUIK) {
        Tensor masked = weight;
        for (auto i : candidates) masked[i] = 0.0;
        out.weight_q = quantize(weight, compute_qparams(masked, cfg.weight_spec, AxisRole::WeightRows));
    } else {
        auto fb = detail::error_feedback_quantize(weight, calib, cfg.weight_spec, cfg.gptq_damping, &kept);
        out.weight_q = std::move(fb.q);
        for (auto i : candidates) values[i] = fb.kept_values[i];
    }
    out.outliers = detail::verified_outliers(weight, calib, out, candidates, values);

    // Fallback: the same outliers on the unmasked RTN grid.
    QuantizedLayer plain = quantize_with_scales(weight, calib, cfg, std::nullopt);
    plain.weight_q = quantize(weight, compute_qparams(weight, cfg.weight_spec, AxisRole::WeightRows));
    std::vector<double> originals(weight.data().begin(), weight.data().end());
    plain.outliers = detail::verified_outliers(weight, calib, plain, candidates, originals);
    if (block_loss(calib, weight, plain) < block_loss(calib, weight, out)) return plain;
    return out;
}

}  // namespace edgeptq
