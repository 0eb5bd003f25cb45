#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace edgeptq {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major tensor of finite reals.
///
/// Rank-1 tensors behave as a single row; higher ranks fold every trailing
/// dimension into the column count, so `rows() * cols() == size()` always.
class Tensor {
public:
    Tensor() = default;

    /// Throws ShapeError when the element count disagrees with `shape` and
    /// DataError when any value is NaN or infinite.
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> row(std::size_t r) const;

    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Stacks matrices with identical column counts along the row axis.
Tensor concat_rows(std::span<const Tensor> parts);

}  // namespace edgeptq
