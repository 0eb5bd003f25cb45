#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "edgeptq/model_graph.hpp"
#include "edgeptq/tensor.hpp"
#include "edgeptq/tensor_io.hpp"

namespace edgeptq {

/// Pre-extracted calibration features: a directory holding manifest.json (a
/// JSON array of {name, shape, file}) and one float32 payload per sample.
struct CalibArchive {
    std::vector<TensorEntry> manifest;
    std::vector<Tensor> samples;

    std::size_t size() const noexcept { return samples.size(); }
    /// Shared feature width; 0 for an empty archive.
    std::size_t feature_dim() const;
};

CalibArchive load_archive(const std::filesystem::path& dir);
void save_archive(const CalibArchive& archive, const std::filesystem::path& dir);

/// Builds an archive from in-memory samples, naming them sample_000...
CalibArchive make_archive(std::vector<Tensor> samples);

/// Seeded subset of k samples without replacement, kept in archive order.
/// Subsets drawn with the same seed are nested: k1 <= k2 implies the k1-set
/// is contained in the k2-set.
CalibArchive sample_subset(const CalibArchive& archive, std::size_t k, std::uint64_t seed);

/// Runs every sample through the graph (batch size 1) and collects the
/// per-layer inputs.
ActivationTrace capture_trace(const LayerGraph& graph, const CalibArchive& archive);

struct LayerStats {
    std::vector<double> max_abs;  // per channel
    double min = 0.0;
    double max = 0.0;
    std::optional<double> kurtosis;  // absent when the layer input has zero variance
    std::size_t count = 0;
};

std::vector<LayerStats> collect_stats(const ActivationTrace& trace);

}  // namespace edgeptq
