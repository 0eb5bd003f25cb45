// Rounding optimization: binary up/down offsets on top of floor codes,
// refined by greedy coordinate passes on the block reconstruction loss.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "../linalg.hpp"
#include "edgeptq/error.hpp"
#include "internal.hpp"

namespace edgeptq {

QuantizedLayer tesseraq(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg, SearchTrace* trace) {
    cfg.validate();
    detail::check_calibration(weight, calib);

    QuantizedLayer out = quantize_with_scales(weight, calib, cfg, std::nullopt);
    const QuantParams& params = out.weight_q.params;
    const auto range = quant_range(params.spec);
    const std::size_t rows = weight.rows(), cols = weight.cols(), samples = calib.rows();

    const Tensor x_hat = transform_input(calib, out);
    const std::vector<double> x_hat_cols = detail::transpose(x_hat);  // column j at [j * samples]
    std::vector<double> col_norm2(cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t s = 0; s < samples; ++s) col_norm2[j] += x_hat_cols[j * samples + s] * x_hat_cols[j * samples + s];
    }
    const Tensor reference = detail::matmul_nt(calib, weight);

    std::vector<std::int32_t> floor_code(weight.size());
    std::vector<int> offset(weight.size());
    std::vector<double> residual_mag(weight.size());
    std::vector<std::size_t> part_of(weight.size());
    for (std::size_t p = 0; p < params.partitions.size(); ++p) {
        for (std::size_t i = params.partitions[p].begin; i < params.partitions[p].end; ++i) part_of[i] = p;
    }
    auto code_for = [&](std::size_t i, int alpha) {
        const double c = static_cast<double>(floor_code[i]) + alpha;
        return static_cast<std::int32_t>(std::clamp(c, static_cast<double>(range.min), static_cast<double>(range.max)));
    };
    for (std::size_t i = 0; i < weight.size(); ++i) {
        const std::size_t p = part_of[i];
        const double t = weight[i] / params.scales[p];
        const double fl = std::floor(t);
        floor_code[i] = static_cast<std::int32_t>(fl) + params.zero_points[p];
        // Start from round-to-nearest.
        offset[i] = round_half_even(t) > fl ? 1 : 0;
        residual_mag[i] = std::abs(t - round_half_even(t));
    }

    auto& codes = out.weight_q.codes;
    double total_loss = 0.0;
    std::vector<std::vector<double>> residuals(rows, std::vector<double>(samples));
    std::vector<double> row_loss(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> w_hat(cols);
        for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t i = r * cols + j;
            codes[i] = code_for(i, offset[i]);
            w_hat[j] = params.scales[part_of[i]] * static_cast<double>(codes[i] - params.zero_points[part_of[i]]);
        }
        for (std::size_t s = 0; s < samples; ++s) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) acc += x_hat.at(s, j) * w_hat[j];
            residuals[r][s] = reference.at(s, r) - acc;
            row_loss[r] += residuals[r][s] * residuals[r][s];
        }
        total_loss += row_loss[r];
    }
    if (trace) trace->push_back({"pass=0", total_loss});

    for (int pass = 1; pass <= cfg.search_budget; ++pass) {
        bool changed = false;
        for (std::size_t r = 0; r < rows; ++r) {
            std::vector<std::size_t> order(cols);
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return residual_mag[r * cols + a] > residual_mag[r * cols + b];
            });
            auto& res = residuals[r];
            for (std::size_t j : order) {
                const std::size_t i = r * cols + j;
                const std::int32_t flipped = code_for(i, 1 - offset[i]);
                if (flipped == codes[i]) continue;
                const double delta = params.scales[part_of[i]] * static_cast<double>(flipped - codes[i]);
                const double* xc = &x_hat_cols[j * samples];
                double dot = 0.0;
                for (std::size_t s = 0; s < samples; ++s) dot += xc[s] * res[s];
                const double change = -2.0 * delta * dot + delta * delta * col_norm2[j];
                if (!(change < -1e-12 * row_loss[r])) continue;
                for (std::size_t s = 0; s < samples; ++s) res[s] -= delta * xc[s];
                row_loss[r] += change;
                offset[i] = 1 - offset[i];
                codes[i] = flipped;
                changed = true;
            }
        }
        if (trace) {
            total_loss = std::accumulate(row_loss.begin(), row_loss.end(), 0.0);
            trace->push_back({"pass=" + std::to_string(pass), total_loss});
        }
        if (!changed) break;
    }
    return out;
}

}  // namespace edgeptq
