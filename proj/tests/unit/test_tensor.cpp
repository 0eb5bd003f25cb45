#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "edgeptq/error.hpp"
#include "edgeptq/tensor.hpp"
#include "edgeptq/tensor_io.hpp"

using namespace edgeptq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("edgeptq_tensor_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST(Tensor, ShapeAndAccess) {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(t.rows(), 2u);
    EXPECT_EQ(t.cols(), 3u);
    EXPECT_EQ(t.at(1, 2), 6.0);
    EXPECT_EQ(t.row(1)[0], 4.0);

    Tensor v({4}, {1, 2, 3, 4});
    EXPECT_EQ(v.rows(), 1u);
    EXPECT_EQ(v.cols(), 4u);

    Tensor cube({2, 2, 3}, std::vector<double>(12, 0.0));
    EXPECT_EQ(cube.rows(), 2u);
    EXPECT_EQ(cube.cols(), 6u);
}

TEST(Tensor, RejectsBadInput) {
    EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), ShapeError);
    EXPECT_THROW(Tensor({0, 2}, {}), ShapeError);
    EXPECT_THROW(Tensor({2}, {1, std::numeric_limits<double>::quiet_NaN()}), DataError);
    EXPECT_THROW(Tensor({1}, {std::numeric_limits<double>::infinity()}), DataError);
}

TEST(Tensor, ConcatRows) {
    std::vector<Tensor> parts{Tensor::matrix(1, 2, {1, 2}), Tensor::matrix(2, 2, {3, 4, 5, 6})};
    Tensor all = concat_rows(parts);
    EXPECT_EQ(all, Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}));
    std::vector<Tensor> bad{Tensor::matrix(1, 2, {1, 2}), Tensor::matrix(1, 3, {1, 2, 3})};
    EXPECT_THROW(concat_rows(bad), ShapeError);
}

TEST(TensorIo, Float32RoundTrip) {
    const fs::path dir = scratch("roundtrip");
    Tensor t = Tensor::matrix(2, 2, {0.5, -1.25, 3.0, 1e-3});
    write_f32(dir / "t.f32", t);
    EXPECT_EQ(fs::file_size(dir / "t.f32"), 16u);
    Tensor back = read_f32(dir / "t.f32", {2, 2});
    EXPECT_EQ(back.at(0, 1), -1.25);
    EXPECT_EQ(back.at(1, 1), static_cast<double>(1e-3f));
}

TEST(TensorIo, LittleEndianLayout) {
    const fs::path dir = scratch("endian");
    write_f32(dir / "one.f32", Tensor({1}, {1.0}));
    std::ifstream in(dir / "one.f32", std::ios::binary);
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    EXPECT_EQ(b[0], 0x00);
    EXPECT_EQ(b[1], 0x00);
    EXPECT_EQ(b[2], 0x80);
    EXPECT_EQ(b[3], 0x3f);
}

TEST(TensorIo, LengthMismatchIsFormatError) {
    const fs::path dir = scratch("mismatch");
    write_f32(dir / "t.f32", Tensor({3}, {1, 2, 3}));
    EXPECT_THROW(read_f32(dir / "t.f32", {2, 2}), FormatError);
    std::ofstream(dir / "odd.f32", std::ios::binary) << "abcde";
    EXPECT_THROW(read_f32_flat(dir / "odd.f32"), FormatError);
    EXPECT_THROW(read_f32(dir / "absent.f32", {1}), IoError);
}

TEST(TensorIo, NonFinitePayloadIsDataError) {
    const fs::path dir = scratch("nan");
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::ofstream(dir / "nan.f32", std::ios::binary).write(reinterpret_cast<const char*>(&nan), 4);
    EXPECT_THROW(read_f32(dir / "nan.f32", {1}), DataError);
}

TEST(TensorIo, ManifestEntries) {
    auto e = tensor_entry_from_json(nlohmann::json{{"name", "x"}, {"shape", {2, 3}}});
    EXPECT_EQ(e.file, "x.f32");
    EXPECT_EQ(e.shape, (Shape{2, 3}));
    EXPECT_EQ(to_json(e)["file"], "x.f32");
    EXPECT_THROW(tensor_entry_from_json(nlohmann::json{{"shape", {2}}}), FormatError);
    EXPECT_THROW(tensor_entry_from_json(nlohmann::json{{"name", "x"}, {"shape", "2x3"}}), FormatError);
}
