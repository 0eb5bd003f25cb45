#include "linalg.hpp"

#include <cmath>

#include "edgeptq/error.hpp"

namespace edgeptq::detail {

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    if (b.cols() != k) {
        throw ShapeError("matmul: inner dimensions " + std::to_string(k) + " and " + std::to_string(b.cols()) +
                         " differ");
    }
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto ar = a.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const auto br = b.row(j);
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += ar[t] * br[t];
            out[i * n + j] = acc;
        }
    }
    return Tensor::matrix(m, n, std::move(out));
}

std::vector<double> gram(const Tensor& x) {
    const std::size_t m = x.rows(), k = x.cols();
    std::vector<double> g(k * k, 0.0);
    for (std::size_t s = 0; s < m; ++s) {
        const auto r = x.row(s);
        for (std::size_t i = 0; i < k; ++i) {
            if (r[i] == 0.0) continue;
            for (std::size_t j = i; j < k; ++j) g[i * k + j] += r[i] * r[j];
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < i; ++j) g[i * k + j] = g[j * k + i];
    }
    return g;
}

bool cholesky_lower(std::vector<double>& a, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        const double root = std::sqrt(d);
        a[j * n + j] = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / root;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
    }
    return true;
}

std::vector<double> inverse_from_cholesky(const std::vector<double>& lower, std::size_t n) {
    // Invert L, then A^-1 = L^-T L^-1.
    std::vector<double> linv(n * n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        linv[c * n + c] = 1.0 / lower[c * n + c];
        for (std::size_t i = c + 1; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = c; k < i; ++k) s -= lower[i * n + k] * linv[k * n + c];
            linv[i * n + c] = s / lower[i * n + i];
        }
    }
    std::vector<double> inv(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = j; k < n; ++k) s += linv[k * n + i] * linv[k * n + j];
            inv[i * n + j] = s;
            inv[j * n + i] = s;
        }
    }
    return inv;
}

bool cholesky_upper(std::vector<double>& a, std::size_t n) {
    if (!cholesky_lower(a, n)) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            a[i * n + j] = a[j * n + i];
            a[j * n + i] = 0.0;
        }
    }
    return true;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace edgeptq::detail
