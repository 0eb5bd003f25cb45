#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "edgeptq/tensor.hpp"

namespace edgeptq {

/// Manifest entry describing one binary tensor payload. Payloads are
/// little-endian IEEE-754 float32, row-major, with no header.
struct TensorEntry {
    std::string name;
    Shape shape;
    std::string file;  // relative to the manifest directory
};

nlohmann::json to_json(const TensorEntry& entry);
TensorEntry tensor_entry_from_json(const nlohmann::json& j);

void write_f32(const std::filesystem::path& path, const Tensor& tensor);

/// Throws FormatError if the file size is not 4 * prod(shape) bytes and
/// DataError on NaN/Inf payload values.
Tensor read_f32(const std::filesystem::path& path, const Shape& shape);

/// Reads a payload of unknown shape as a flat vector.
Tensor read_f32_flat(const std::filesystem::path& path);

}  // namespace edgeptq
