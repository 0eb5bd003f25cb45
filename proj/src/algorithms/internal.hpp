#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "edgeptq/algorithms.hpp"

namespace edgeptq::detail {

/// Min-max parameters where every partition's observed range is shrunk to
/// [beta * min, gamma * max]. A span of size one broadcasts to all partitions.
QuantParams compute_qparams_clipped(const Tensor& tensor, const QuantSpec& spec, AxisRole role,
                                    std::span<const double> gamma, std::span<const double> beta);

Tensor scale_columns(const Tensor& m, std::span<const double> s);
Tensor divide_columns(const Tensor& m, std::span<const double> s);

/// Per-column max |value|.
std::vector<double> column_max_abs(const Tensor& m);

/// Checks conformability of weight (out x in) and calibration (samples x in).
void check_calibration(const Tensor& weight, const Tensor& calib);

/// Column-major copy: out[c * rows + r] = m(r, c).
std::vector<double> transpose(const Tensor& m);

/// Result of the column-sequential error-feedback loop shared by GPTQ and
/// SpQR. `kept` marks elements held exactly (their error is not propagated);
/// `kept_values` are the values those elements had when processed.
struct ErrorFeedbackResult {
    QTensor q;
    std::vector<double> kept_values;  // indexed like the weight; meaningful for kept elements
};

/// Inverse-Hessian upper factor for H = 2 X^T X + lambda I, lambda =
/// damping * mean(diag). Dead input channels (zero diagonal) get a unit
/// pivot; their indices are returned through `dead`. The damping is raised
/// tenfold up to three times before giving up with ConditioningError.
std::vector<double> inverse_hessian_factor(std::vector<double> hessian, std::size_t n, double damping,
                                           std::vector<bool>* dead = nullptr);

ErrorFeedbackResult error_feedback_quantize(const Tensor& weight, const Tensor& calib, const QuantSpec& spec,
                                            double damping, const std::vector<bool>* kept);

/// Greedy outlier retention that only keeps a candidate if holding it exact
/// does not increase that row's reconstruction error. `candidates` are flat
/// weight indices in priority order; `values` holds the high-precision value
/// for each weight element.
std::vector<Outlier> verified_outliers(const Tensor& weight, const Tensor& calib, const QuantizedLayer& layer,
                                       std::span<const std::size_t> candidates, std::span<const double> values);

}  // namespace edgeptq::detail
