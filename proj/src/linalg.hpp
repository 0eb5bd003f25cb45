#pragma once

// Small dense helpers for the layer sizes the algorithms work on. Matrices
// are row-major std::vector<double> with explicit dimensions.

#include <cstddef>
#include <span>
#include <vector>

#include "edgeptq/tensor.hpp"

namespace edgeptq::detail {

/// a (m x k) times b^T where b is (n x k); returns m x n.
Tensor matmul_nt(const Tensor& a, const Tensor& b);

/// X^T X for X (m x k); returns k x k.
std::vector<double> gram(const Tensor& x);

/// In-place lower Cholesky factor of an n x n SPD matrix. Returns false if a
/// non-positive pivot shows up; the upper triangle is zeroed on success.
bool cholesky_lower(std::vector<double>& a, std::size_t n);

/// Inverse of an SPD matrix from its lower Cholesky factor.
std::vector<double> inverse_from_cholesky(const std::vector<double>& lower, std::size_t n);

/// Upper factor U with A = U^T U. Returns false if A is not SPD.
bool cholesky_upper(std::vector<double>& a, std::size_t n);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace edgeptq::detail
