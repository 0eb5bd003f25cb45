#include "edgeptq/tensor_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "edgeptq/error.hpp"

namespace edgeptq {

namespace fs = std::filesystem;

nlohmann::json to_json(const TensorEntry& entry) {
    return {{"name", entry.name}, {"shape", entry.shape}, {"file", entry.file}};
}

TensorEntry tensor_entry_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("manifest entry must be an object");
    TensorEntry e;
    try {
        e.name = j.at("name").get<std::string>();
        e.shape = j.at("shape").get<Shape>();
        e.file = j.contains("file") ? j.at("file").get<std::string>() : e.name + ".f32";
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("bad manifest entry: ") + ex.what());
    }
    if (e.shape.empty()) throw FormatError("manifest entry '" + e.name + "' has an empty shape");
    for (auto d : e.shape) {
        if (d == 0) throw FormatError("manifest entry '" + e.name + "' has a zero dimension");
    }
    return e;
}

void write_f32(const fs::path& path, const Tensor& tensor) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    std::vector<char> bytes;
    bytes.reserve(tensor.size() * 4);
    for (double v : tensor.data()) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

namespace {

std::vector<double> read_payload(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 4 != 0) {
        throw FormatError(path.string() + ": payload length " + std::to_string(bytes.size()) +
                          " is not a multiple of 4");
    }
    std::vector<double> values(bytes.size() / 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t{bytes[4 * i + b]} << (8 * b);
        float f = std::bit_cast<float>(bits);
        if (!std::isfinite(f)) {
            throw DataError(path.string() + ": non-finite value at index " + std::to_string(i));
        }
        values[i] = f;
    }
    return values;
}

}  // namespace

Tensor read_f32(const fs::path& path, const Shape& shape) {
    auto values = read_payload(path);
    if (values.size() != element_count(shape)) {
        throw FormatError(path.string() + ": payload holds " + std::to_string(values.size()) +
                          " values but shape " + shape_to_string(shape) + " needs " +
                          std::to_string(element_count(shape)));
    }
    return Tensor(shape, std::move(values));
}

Tensor read_f32_flat(const fs::path& path) {
    auto values = read_payload(path);
    if (values.empty()) throw FormatError(path.string() + ": empty payload");
    auto n = values.size();
    return Tensor({n}, std::move(values));
}

}  // namespace edgeptq
