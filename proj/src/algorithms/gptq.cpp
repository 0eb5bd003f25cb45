// Hessian-based error feedback (GPTQ) and the shared column loop.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "../linalg.hpp"
#include "edgeptq/error.hpp"
#include "internal.hpp"

namespace edgeptq {

namespace detail {

std::vector<double> inverse_hessian_factor(std::vector<double> hessian, std::size_t n, double damping,
                                           std::vector<bool>* dead) {
    if (dead) dead->assign(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        if (hessian[j * n + j] == 0.0) {
            hessian[j * n + j] = 1.0;
            if (dead) (*dead)[j] = true;
        }
    }
    double mean_diag = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean_diag += hessian[j * n + j];
    mean_diag /= static_cast<double>(n);

    double lambda = damping * mean_diag;
    for (int attempt = 0; attempt <= 3; ++attempt, lambda *= 10.0) {
        std::vector<double> h = hessian;
        for (std::size_t j = 0; j < n; ++j) h[j * n + j] += lambda;
        if (!cholesky_lower(h, n)) continue;
        std::vector<double> inv = inverse_from_cholesky(h, n);
        if (cholesky_upper(inv, n)) return inv;
    }
    throw ConditioningError("Hessian is not positive definite after damping " + std::to_string(lambda / 10.0));
}

ErrorFeedbackResult error_feedback_quantize(const Tensor& weight, const Tensor& calib, const QuantSpec& spec,
                                            double damping, const std::vector<bool>* kept) {
    check_calibration(weight, calib);
    const std::size_t rows = weight.rows(), cols = weight.cols();

    std::vector<double> hessian = gram(calib);
    for (double& v : hessian) v *= 2.0;
    std::vector<bool> dead;
    const std::vector<double> u = inverse_hessian_factor(std::move(hessian), cols, damping, &dead);

    Tensor work = weight;
    for (std::size_t j = 0; j < cols; ++j) {
        if (!dead[j]) continue;
        for (std::size_t r = 0; r < rows; ++r) work.at(r, j) = 0.0;
    }
    auto is_kept = [&](std::size_t i) { return kept && (*kept)[i]; };

    // Range statistics ignore kept elements.
    auto range_source = [&](const Tensor& w) {
        Tensor masked = w;
        if (kept) {
            for (std::size_t i = 0; i < masked.size(); ++i) {
                if ((*kept)[i]) masked[i] = 0.0;
            }
        }
        return masked;
    };

    QuantParams params = compute_qparams(range_source(work), spec, AxisRole::WeightRows);
    const bool grouped = spec.granularity == Granularity::PerGroup;
    const std::size_t group = grouped ? *spec.group_size : cols;
    const std::size_t groups_per_row = cols / group;
    const auto range = quant_range(spec);

    ErrorFeedbackResult result;
    result.kept_values.assign(weight.size(), 0.0);
    result.q.codes.assign(weight.size(), 0);

    for (std::size_t j = 0; j < cols; ++j) {
        if (grouped && j % group == 0) {
            // Groups take their range from the already-updated weights.
            const QuantParams fresh = compute_qparams(range_source(work), spec, AxisRole::WeightRows);
            for (std::size_t r = 0; r < rows; ++r) {
                const std::size_t p = r * groups_per_row + j / group;
                params.scales[p] = fresh.scales[p];
                params.zero_points[p] = fresh.zero_points[p];
            }
        }
        const double pivot = u[j * cols + j];
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t idx = r * cols + j;
            const std::size_t p = grouped ? r * groups_per_row + j / group
                                          : (spec.granularity == Granularity::PerTensor ? 0 : r);
            const double w = work[idx];
            result.q.codes[idx] = quantize_value(w, params.scales[p], params.zero_points[p], range);
            double err = 0.0;
            if (is_kept(idx)) {
                result.kept_values[idx] = w;
            } else {
                const double dq = params.scales[p] * static_cast<double>(result.q.codes[idx] - params.zero_points[p]);
                err = (w - dq) / pivot;
            }
            if (err == 0.0) continue;
            for (std::size_t k = j + 1; k < cols; ++k) work[r * cols + k] -= err * u[j * cols + k];
        }
    }
    result.q.params = std::move(params);
    return result;
}

}  // namespace detail

QuantizedLayer gptq(const Tensor& weight, const Tensor& calib, const AlgoConfig& cfg) {
    cfg.validate();
    auto fb = detail::error_feedback_quantize(weight, calib, cfg.weight_spec, cfg.gptq_damping, nullptr);
    QuantizedLayer out = quantize_with_scales(weight, calib, cfg, std::nullopt);
    out.weight_q = std::move(fb.q);
    return out;
}

}  // namespace edgeptq
