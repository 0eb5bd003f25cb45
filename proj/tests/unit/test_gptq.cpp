// Error-feedback quantization checked against a direct, unfactored
// implementation of the column-sequential update.

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "algorithms/internal.hpp"
#include "edgeptq/algorithms.hpp"
#include "edgeptq/error.hpp"
#include "edgeptq/random.hpp"

using namespace edgeptq;

namespace {

Tensor gaussian(PortableRng& rng, std::size_t rows, std::size_t cols) {
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = rng.normal();
    return Tensor::matrix(rows, cols, std::move(v));
}

std::vector<double> invert(std::vector<double> a, std::size_t n) {
    std::vector<double> inv(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
        }
        for (std::size_t k = 0; k < n; ++k) {
            std::swap(a[c * n + k], a[piv * n + k]);
            std::swap(inv[c * n + k], inv[piv * n + k]);
        }
        const double d = a[c * n + c];
        for (std::size_t k = 0; k < n; ++k) {
            a[c * n + k] /= d;
            inv[c * n + k] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a[r * n + c];
            for (std::size_t k = 0; k < n; ++k) {
                a[r * n + k] -= f * a[c * n + k];
                inv[r * n + k] -= f * inv[c * n + k];
            }
        }
    }
    return inv;
}

// Quantize column j, push its error onto later columns through the current
// inverse Hessian, then eliminate j from that inverse.
Tensor reference_gptq(const Tensor& w, const Tensor& x, const QuantParams& grid, double damping) {
    const std::size_t rows = w.rows(), cols = w.cols();
    std::vector<double> h(cols * cols, 0.0);
    for (std::size_t i = 0; i < cols; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            for (std::size_t t = 0; t < x.rows(); ++t) h[i * cols + j] += 2.0 * x.at(t, i) * x.at(t, j);
        }
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < cols; ++i) mean += h[i * cols + i];
    mean /= static_cast<double>(cols);
    for (std::size_t i = 0; i < cols; ++i) h[i * cols + i] += damping * mean;
    std::vector<double> hinv = invert(h, cols);

    const auto range = quant_range(grid.spec);
    Tensor work = w;
    Tensor out = w;
    for (std::size_t j = 0; j < cols; ++j) {
        const double d = hinv[j * cols + j];
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t p = grid.partition_of(r * cols + j);
            const double v = work.at(r, j);
            const auto code = quantize_value(v, grid.scales[p], grid.zero_points[p], range);
            const double dq = grid.scales[p] * (code - grid.zero_points[p]);
            out.at(r, j) = dq;
            const double e = (v - dq) / d;
            for (std::size_t k = j + 1; k < cols; ++k) work.at(r, k) -= e * hinv[j * cols + k];
        }
        std::vector<double> next = hinv;
        for (std::size_t a = 0; a < cols; ++a) {
            for (std::size_t b = 0; b < cols; ++b) next[a * cols + b] -= hinv[a * cols + j] * hinv[j * cols + b] / d;
        }
        hinv = std::move(next);
    }
    return out;
}

double output_error(const Tensor& x, const Tensor& w, const Tensor& w_hat) {
    double total = 0.0;
    for (std::size_t t = 0; t < x.rows(); ++t) {
        for (std::size_t o = 0; o < w.rows(); ++o) {
            double acc = 0.0;
            for (std::size_t i = 0; i < w.cols(); ++i) acc += x.at(t, i) * (w.at(o, i) - w_hat.at(o, i));
            total += acc * acc;
        }
    }
    return total;
}

AlgoConfig gptq_config(int bits, Granularity g = Granularity::PerChannel) {
    AlgoConfig cfg;
    cfg.method = Method::GPTQ;
    cfg.weight_spec = {bits, true, g, std::nullopt};
    return cfg;
}

}  // namespace

TEST(Gptq, MatchesUnfactoredReference) {
    int compared = 0;
    for (int s = 0; s < 150; ++s) {
        PortableRng rng(700 + s);
        const std::size_t out = 1 + rng.below(5), in = 2 + rng.below(7);
        const Tensor w = gaussian(rng, out, in);
        const Tensor x = gaussian(rng, 4 * in, in);
        const Granularity g = rng.below(2) ? Granularity::PerChannel : Granularity::PerTensor;
        const AlgoConfig cfg = gptq_config(static_cast<int>(2 + rng.below(3)), g);
        const QuantizedLayer q = gptq(w, x, cfg);
        const Tensor expected = reference_gptq(w, x, q.weight_q.params, cfg.gptq_damping);
        const Tensor actual = effective_weight(q);
        for (std::size_t i = 0; i < w.size(); ++i) ASSERT_NEAR(actual[i], expected[i], 1e-9) << "seed " << s;
        ++compared;
    }
    EXPECT_EQ(compared, 150);
}

TEST(Gptq, UsesTheRtnGridPerChannel) {
    PortableRng rng(1);
    const Tensor w = gaussian(rng, 3, 5);
    const Tensor x = gaussian(rng, 20, 5);
    const AlgoConfig cfg = gptq_config(3);
    const auto g = gptq(w, x, cfg).weight_q.params;
    const auto r = rtn(w, cfg).weight_q.params;
    EXPECT_EQ(g.scales, r.scales);
    EXPECT_EQ(g.zero_points, r.zero_points);
}

TEST(Gptq, OrthonormalCalibrationEqualsRtn) {
    PortableRng rng(2);
    const Tensor w = gaussian(rng, 4, 6);
    std::vector<double> eye(36, 0.0);
    for (std::size_t i = 0; i < 6; ++i) eye[i * 6 + i] = 1.0;
    const Tensor x = Tensor::matrix(6, 6, eye);
    const AlgoConfig cfg = gptq_config(2);
    EXPECT_EQ(gptq(w, x, cfg).weight_q.codes, rtn(w, cfg).weight_q.codes);
}

TEST(Gptq, HandInstanceBetweenOracleAndRtn) {
    const Tensor w = Tensor::matrix(1, 4, {0.4, 0.6, -0.2, 0.1});
    // Strongly correlated features: every column is a noisy copy of one signal.
    PortableRng rng(3);
    std::vector<double> xv(32 * 4);
    for (std::size_t t = 0; t < 32; ++t) {
        const double base = rng.normal();
        for (std::size_t j = 0; j < 4; ++j) xv[t * 4 + j] = base + 0.3 * rng.normal();
    }
    const Tensor x = Tensor::matrix(32, 4, xv);
    const AlgoConfig cfg = gptq_config(2);
    const QuantizedLayer g = gptq(w, x, cfg);
    const double loss_g = block_loss(x, w, g);
    const double loss_r = block_loss(x, w, rtn(w, x, cfg));

    const auto& p = g.weight_q.params;
    double best = INFINITY;
    for (int code = 0; code < 256; ++code) {
        std::vector<double> v(4);
        for (int j = 0; j < 4; ++j) v[j] = p.scales[0] * (((code >> (2 * j)) & 3) - 2);
        best = std::min(best, output_error(x, w, Tensor::matrix(1, 4, v)));
    }
    EXPECT_LE(loss_g, loss_r + 1e-12);
    EXPECT_GE(loss_g, best - 1e-12);
    EXPECT_NEAR(loss_g, output_error(x, w, effective_weight(g)), 1e-12);
}

TEST(Gptq, ZeroWeightGivesZeroError) {
    PortableRng rng(4);
    const Tensor x = gaussian(rng, 10, 3);
    const Tensor w = Tensor::zeros({2, 3});
    const QuantizedLayer q = gptq(w, x, gptq_config(3));
    EXPECT_EQ(block_loss(x, w, q), 0.0);
    const Tensor w_hat = effective_weight(q);
    for (double v : w_hat.data()) EXPECT_EQ(v, 0.0);
}

TEST(Gptq, DeadInputChannelIsTolerated) {
    PortableRng rng(5);
    Tensor x = gaussian(rng, 12, 4);
    for (std::size_t t = 0; t < 12; ++t) x.at(t, 2) = 0.0;
    const Tensor w = gaussian(rng, 2, 4);
    QuantizedLayer q;
    ASSERT_NO_THROW(q = gptq(w, x, gptq_config(4)));
    const Tensor w_hat = effective_weight(q);
    for (std::size_t r = 0; r < 2; ++r) EXPECT_EQ(w_hat.at(r, 2), 0.0);
    EXPECT_TRUE(std::isfinite(block_loss(x, w, q)));
}

TEST(Gptq, PerGroupProducesGroupedParams) {
    PortableRng rng(6);
    const Tensor w = gaussian(rng, 2, 8);
    const Tensor x = gaussian(rng, 24, 8);
    AlgoConfig cfg = gptq_config(3, Granularity::PerGroup);
    cfg.weight_spec.group_size = 4;
    const QuantizedLayer q = gptq(w, x, cfg);
    EXPECT_EQ(q.weight_q.params.partition_count(), 4u);
    EXPECT_LT(block_loss(x, w, q), block_loss(x, w, rtn(w, x, cfg)));
}

TEST(Gptq, IndefiniteHessianRaisesConditioningError) {
    // Off-diagonal mass no tenfold damping schedule can dominate.
    std::vector<double> h{1.0, 100.0, 100.0, 1.0};
    EXPECT_THROW(detail::inverse_hessian_factor(h, 2, 0.01), ConditioningError);
    // A mildly indefinite matrix is rescued by the raised damping.
    std::vector<double> mild{1.0, 1.05, 1.05, 1.0};
    EXPECT_NO_THROW(detail::inverse_hessian_factor(mild, 2, 0.01));
}

TEST(Gptq, RejectsNonConformableCalibration) {
    PortableRng rng(7);
    EXPECT_THROW(gptq(gaussian(rng, 2, 4), gaussian(rng, 5, 3), gptq_config(4)), ShapeError);
}
