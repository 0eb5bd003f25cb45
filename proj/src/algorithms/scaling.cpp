// Scaling-based transformations: SmoothQuant, AWQ and OmniQuant.

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <tuple>

#include "../linalg.hpp"
#include "edgeptq/error.hpp"
#include "internal.hpp"

namespace edgeptq {

namespace {

std::string format_label(const char* fmt, double a, double b = 0.0, double c = 0.0) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), fmt, a, b, c);
    return buf;
}

void record(SearchTrace* trace, std::string label, double loss) {
    if (trace) trace->push_back({std::move(label), loss});
}

/// Dequantized weights with one (gamma, beta) pair per partition.
QuantizedLayer clipped_layer(const Tensor& scaled_weight, const QuantizedLayer& base, const QuantSpec& spec,
                             std::span<const double> gamma, std::span<const double> beta) {
    QuantizedLayer out = base;
    out.weight_q = quantize(scaled_weight,
                            detail::compute_qparams_clipped(scaled_weight, spec, AxisRole::WeightRows, gamma, beta));
    return out;
}

}  // namespace

QuantizedLayer smoothquant(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg) {
    cfg.validate();
    return quantize_with_scales(weight, calib, cfg, smoothing_scales(weight, calib, cfg.smooth_alpha));
}

QuantizedLayer awq(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg, SearchTrace* trace) {
    cfg.validate();
    detail::check_calibration(weight, calib);

    std::optional<QuantizedLayer> best;
    double best_loss = 0.0;
    auto consider = [&](QuantizedLayer candidate, std::string label) {
        const double loss = block_loss(calib, weight, candidate);
        record(trace, std::move(label), loss);
        if (!best || loss < best_loss) {
            best = std::move(candidate);
            best_loss = loss;
        }
    };

    // The unscaled layer competes with the grid unless the grid is a single
    // forced point.
    if (cfg.awq_grid_steps > 0) consider(quantize_with_scales(weight, calib, cfg, std::nullopt), "s=1");
    const int steps = cfg.awq_grid_steps;
    for (int k = 0; k <= steps; ++k) {
        const double alpha = steps == 0 ? 0.0 : static_cast<double>(k) / steps;
        consider(quantize_with_scales(weight, calib, cfg, smoothing_scales(weight, calib, alpha)),
                 format_label("alpha=%.4f", alpha));
    }

    if (!cfg.awq_clip) return *best;

    // Per output channel clip ratio search on top of the chosen scaling.
    static constexpr std::array<double, 6> kRatios{1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
    const QuantizedLayer base = *best;
    const Tensor scaled = base.channel_scales ? detail::scale_columns(weight, *base.channel_scales) : weight;
    const Tensor reference = detail::matmul_nt(calib, weight);
    const Tensor x_hat = transform_input(calib, base);
    const std::size_t rows = weight.rows();
    const std::size_t nparts = partition(scaled, cfg.weight_spec, AxisRole::WeightRows).size();

    auto row_losses = [&](const QuantizedLayer& layer) {
        const Tensor approx = detail::matmul_nt(x_hat, effective_weight(layer));
        std::vector<double> out(rows, 0.0);
        for (std::size_t s = 0; s < approx.rows(); ++s) {
            for (std::size_t r = 0; r < rows; ++r) {
                const double d = reference.at(s, r) - approx.at(s, r);
                out[r] += d * d;
            }
        }
        return out;
    };

    if (cfg.weight_spec.granularity == Granularity::PerTensor) {
        for (double ratio : kRatios) {
            const double g[1] = {ratio};
            consider(clipped_layer(scaled, base, cfg.weight_spec, g, g), format_label("clip=%.1f", ratio));
        }
        return *best;
    }

    std::vector<double> best_row_loss(rows, 0.0);
    std::vector<double> best_row_ratio(rows, 1.0);
    for (std::size_t i = 0; i < kRatios.size(); ++i) {
        const double g[1] = {kRatios[i]};
        const QuantizedLayer cand = clipped_layer(scaled, base, cfg.weight_spec, g, g);
        const auto losses = row_losses(cand);
        double total = 0.0;
        for (double l : losses) total += l;
        record(trace, format_label("clip=%.1f", kRatios[i]), total);
        for (std::size_t r = 0; r < rows; ++r) {
            if (i == 0 || losses[r] < best_row_loss[r]) {
                best_row_loss[r] = losses[r];
                best_row_ratio[r] = kRatios[i];
            }
        }
    }
    const std::size_t per_row = nparts / rows;
    std::vector<double> part_ratio(nparts);
    for (std::size_t p = 0; p < nparts; ++p) part_ratio[p] = best_row_ratio[p / per_row];
    QuantizedLayer clipped = clipped_layer(scaled, base, cfg.weight_spec, part_ratio, part_ratio);
    const double loss = block_loss(calib, weight, clipped);
    record(trace, "clip=per-channel", loss);
    if (loss < best_loss) return clipped;
    return *best;
}

QuantizedLayer omniquant(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg, SearchTrace* trace) {
    cfg.validate();
    detail::check_calibration(weight, calib);

    static constexpr std::array<double, 11> kClipGrid{1.0, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.65, 0.6, 0.55, 0.5};
    // Index 0 leaves the channels unscaled; the rest are migration strengths.
    static constexpr std::array<double, 4> kScaleGrid{-1.0, 0.25, 0.5, 0.75};

    using State = std::array<std::size_t, 3>;  // gamma index, beta index, scale index
    const std::array<std::size_t, 3> axis_size{kClipGrid.size(), kClipGrid.size(), kScaleGrid.size()};

    std::map<std::size_t, QuantizedLayer> scaled_base;
    auto base_for = [&](std::size_t si) -> const QuantizedLayer& {
        auto it = scaled_base.find(si);
        if (it == scaled_base.end()) {
            std::optional<std::vector<double>> s;
            if (si != 0) s = smoothing_scales(weight, calib, kScaleGrid[si]);
            it = scaled_base.emplace(si, quantize_with_scales(weight, calib, cfg, std::move(s))).first;
        }
        return it->second;
    };
    auto build = [&](const State& st) {
        const QuantizedLayer& base = base_for(st[2]);
        const Tensor scaled = base.channel_scales ? detail::scale_columns(weight, *base.channel_scales) : weight;
        const double g[1] = {kClipGrid[st[0]]};
        const double b[1] = {kClipGrid[st[1]]};
        return clipped_layer(scaled, base, cfg.weight_spec, g, b);
    };

    std::map<State, double> seen;
    int evaluations = 0;
    auto evaluate = [&](const State& st) -> std::optional<double> {
        if (auto it = seen.find(st); it != seen.end()) return it->second;
        if (evaluations >= cfg.search_budget) return std::nullopt;
        ++evaluations;
        const double loss = block_loss(calib, weight, build(st));
        seen.emplace(st, loss);
        record(trace,
               format_label("gamma=%.2f,beta=%.2f,scale=%.2f", kClipGrid[st[0]], kClipGrid[st[1]],
                            kScaleGrid[st[2]]),
               loss);
        return loss;
    };

    State current{0, 0, 0};
    double current_loss = *evaluate(current);
    bool improved = true;
    bool exhausted = false;
    while (improved && !exhausted) {
        improved = false;
        for (std::size_t axis = 0; axis < 3 && !exhausted; ++axis) {
            State best = current;
            double best_loss = current_loss;
            for (std::size_t v = 0; v < axis_size[axis]; ++v) {
                State cand = current;
                cand[axis] = v;
                auto loss = evaluate(cand);
                if (!loss) {
                    exhausted = true;
                    break;
                }
                if (*loss < best_loss) {
                    best = cand;
                    best_loss = *loss;
                }
            }
            if (best != current) {
                current = best;
                current_loss = best_loss;
                improved = true;
            }
        }
    }
    return build(current);
}

}  // namespace edgeptq
