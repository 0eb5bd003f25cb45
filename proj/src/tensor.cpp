#include "edgeptq/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "edgeptq/error.hpp"

namespace edgeptq {

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty()) throw ShapeError("tensor shape must have at least one dimension");
    for (auto d : shape_) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_to_string(shape_));
    }
    if (element_count(shape_) != data_.size()) {
        throw ShapeError("shape " + shape_to_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw DataError("non-finite value at flat index " + std::to_string(i));
        }
    }
}

Tensor Tensor::zeros(Shape shape) {
    auto n = element_count(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
}

std::size_t Tensor::rows() const noexcept {
    if (shape_.empty()) return 0;
    return shape_.size() == 1 ? 1 : shape_[0];
}

std::size_t Tensor::cols() const noexcept {
    if (shape_.empty()) return 0;
    return shape_.size() == 1 ? shape_[0] : data_.size() / shape_[0];
}

std::span<const double> Tensor::row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("cannot concatenate zero matrices");
    const auto cols = parts.front().cols();
    std::size_t rows = 0;
    std::vector<double> data;
    for (const auto& p : parts) {
        if (p.cols() != cols) {
            throw ShapeError("column mismatch while stacking: " + std::to_string(p.cols()) + " vs " +
                             std::to_string(cols));
        }
        rows += p.rows();
        data.insert(data.end(), p.data().begin(), p.data().end());
    }
    return Tensor::matrix(rows, cols, std::move(data));
}

}  // namespace edgeptq
