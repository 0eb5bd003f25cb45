#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "edgeptq/error.hpp"
#include "edgeptq/quant_core.hpp"
#include "edgeptq/random.hpp"

using namespace edgeptq;

namespace {

QuantSpec spec(int bits, bool sym, Granularity g = Granularity::PerTensor, std::optional<std::size_t> group = {}) {
    return {bits, sym, g, group};
}

}  // namespace

TEST(QuantRangeTest, SignedAndUnsigned) {
    EXPECT_EQ(quant_range(spec(4, true)).min, -8);
    EXPECT_EQ(quant_range(spec(4, true)).max, 7);
    EXPECT_EQ(quant_range(spec(4, false)).min, 0);
    EXPECT_EQ(quant_range(spec(4, false)).max, 15);
    EXPECT_EQ(quant_range(spec(2, true)).min, -2);
    EXPECT_EQ(quant_range(spec(2, true)).max, 1);
    EXPECT_EQ(quant_range(spec(16, true)).max, 32767);
    EXPECT_EQ(quant_range(spec(16, false)).max, 65535);
}

TEST(QuantSpecTest, Validation) {
    EXPECT_NO_THROW(spec(3, true).validate());
    EXPECT_THROW(spec(5, true).validate(), ConfigError);
    EXPECT_THROW(spec(32, true).validate(), ConfigError);
    EXPECT_THROW(spec(4, true, Granularity::PerGroup).validate(), ConfigError);
    EXPECT_THROW(spec(4, true, Granularity::PerChannel, 8).validate(), ConfigError);
    EXPECT_THROW(spec(4, true, Granularity::PerGroup, 0).validate(), ConfigError);
}

TEST(GranularityNames, RoundTrip) {
    for (auto g : {Granularity::PerTensor, Granularity::PerToken, Granularity::PerChannel, Granularity::PerGroup}) {
        EXPECT_EQ(granularity_from_string(to_string(g)), g);
    }
    EXPECT_THROW(granularity_from_string("per-row"), ConfigError);
}

TEST(RoundHalfEven, Ties) {
    EXPECT_EQ(round_half_even(0.5), 0.0);
    EXPECT_EQ(round_half_even(1.5), 2.0);
    EXPECT_EQ(round_half_even(2.5), 2.0);
    EXPECT_EQ(round_half_even(-1.5), -2.0);
    EXPECT_EQ(round_half_even(-2.5), -2.0);
    EXPECT_EQ(round_half_even(2.4999999), 2.0);
    EXPECT_EQ(round_half_even(-0.7), -1.0);
}

TEST(QuantizeValue, SaturatesAtRangeEdges) {
    const auto r = quant_range(spec(4, true));
    const double d = 0.1;
    EXPECT_EQ(quantize_value(d * (r.max + 5), d, 0, r), r.max);
    EXPECT_EQ(quantize_value(d * (r.min - 5), d, 0, r), r.min);
}

TEST(ScaleZero, Symmetric) {
    auto sz = scale_zero_from_range(-3.0, 1.5, spec(4, true));
    EXPECT_DOUBLE_EQ(sz.scale, 3.0 / 7.0);
    EXPECT_EQ(sz.zero_point, 0);
}

TEST(ScaleZero, Asymmetric) {
    auto sz = scale_zero_from_range(-1.0, 3.0, spec(4, false));
    EXPECT_DOUBLE_EQ(sz.scale, 4.0 / 15.0);
    EXPECT_EQ(sz.zero_point, 4);  // round(3.75)

    // A positive-only range is widened down to zero, so zero stays exact.
    auto pos = scale_zero_from_range(2.0, 5.0, spec(4, false));
    EXPECT_DOUBLE_EQ(pos.scale, 5.0 / 15.0);
    EXPECT_EQ(pos.zero_point, 0);
}

TEST(ScaleZero, DegenerateConstantDecodesExactly) {
    for (bool sym : {true, false}) {
        for (double c : {2.5, -0.75, 0.0, 1e-7}) {
            const QuantSpec s = spec(3, sym);
            Tensor t({4}, std::vector<double>(4, c));
            Tensor back = fake_quantize(t, compute_qparams(t, s, AxisRole::Whole));
            for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(back[i], c) << "sym=" << sym << " c=" << c;
        }
    }
    EXPECT_EQ(scale_zero_from_range(0.0, 0.0, spec(4, true)).scale, 1.0);
}

TEST(Partition, Layouts) {
    Tensor w = Tensor::zeros({2, 4});
    EXPECT_EQ(partition(w, spec(4, true), AxisRole::WeightRows), (std::vector<IndexRange>{{0, 8}}));
    EXPECT_EQ(partition(w, spec(4, true, Granularity::PerChannel), AxisRole::WeightRows),
              (std::vector<IndexRange>{{0, 4}, {4, 8}}));
    EXPECT_EQ(partition(w, spec(4, true, Granularity::PerGroup, 2), AxisRole::WeightRows),
              (std::vector<IndexRange>{{0, 2}, {2, 4}, {4, 6}, {6, 8}}));
    EXPECT_EQ(partition(w, spec(4, true, Granularity::PerToken), AxisRole::TokenRows),
              (std::vector<IndexRange>{{0, 4}, {4, 8}}));
}

TEST(Partition, RoleAndDivisibilityErrors) {
    Tensor w = Tensor::zeros({2, 6});
    EXPECT_THROW(partition(w, spec(4, true, Granularity::PerGroup, 4), AxisRole::WeightRows), ConfigError);
    EXPECT_THROW(partition(w, spec(4, true, Granularity::PerToken), AxisRole::WeightRows), ConfigError);
    EXPECT_THROW(partition(w, spec(4, true, Granularity::PerChannel), AxisRole::TokenRows), ConfigError);
}

TEST(Quantize, HandWorkedPerTensor) {
    // max |x| = 1.75 gives scale 0.25 at 4 bits; 0.375 / 0.25 = 1.5 ties to 2.
    Tensor x({4}, {0.75, -1.75, 0.375, 1.25});
    auto q = quantize(x, compute_qparams(x, spec(4, true), AxisRole::Whole));
    EXPECT_EQ(q.codes, (std::vector<std::int32_t>{3, -7, 2, 5}));
    Tensor back = dequantize(q);
    EXPECT_EQ(back, Tensor({4}, {0.75, -1.75, 0.5, 1.25}));
}

TEST(Quantize, PerGroupUsesIndependentScales) {
    Tensor w = Tensor::matrix(1, 4, {1.0, -0.5, 70.0, 7.0});
    auto p = compute_qparams(w, spec(4, true, Granularity::PerGroup, 2), AxisRole::WeightRows);
    ASSERT_EQ(p.partition_count(), 2u);
    EXPECT_DOUBLE_EQ(p.scales[0], 1.0 / 7.0);
    EXPECT_DOUBLE_EQ(p.scales[1], 10.0);
    EXPECT_EQ(p.partition_of(1), 0u);
    EXPECT_EQ(p.partition_of(2), 1u);
    Tensor back = fake_quantize(w, p);
    EXPECT_DOUBLE_EQ(back[0], 1.0);
    EXPECT_DOUBLE_EQ(back[2], 70.0);
}

TEST(Quantize, ShapeMismatchIsShapeError) {
    Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
    auto p = compute_qparams(a, spec(8, true), AxisRole::WeightRows);
    EXPECT_THROW(quantize(Tensor::matrix(1, 4, {1, 2, 3, 4}), p), ShapeError);
}

TEST(QuantizeProperty, FakeQuantizeIsIdempotent) {
    PortableRng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int bits[] = {2, 3, 4, 8};
        const QuantSpec s = spec(bits[rng.below(4)], rng.below(2) == 0, Granularity::PerChannel);
        std::vector<double> v(3 * 8);
        for (auto& x : v) x = rng.normal() * 3.0 + (s.symmetric ? 0.0 : 1.0);
        Tensor t = Tensor::matrix(3, 8, v);
        auto p = compute_qparams(t, s, AxisRole::WeightRows);
        Tensor once = fake_quantize(t, p);
        EXPECT_EQ(fake_quantize(once, p), once);
    }
}

TEST(QuantizeProperty, AsymmetricKeepsZeroExact) {
    PortableRng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(16);
        for (auto& x : v) x = rng.uniform(-1.0, 4.0);
        v[3] = 0.0;
        Tensor t({16}, v);
        Tensor back = fake_quantize(t, compute_qparams(t, spec(4, false), AxisRole::Whole));
        EXPECT_EQ(back[3], 0.0);
    }
}

TEST(QuantizeProperty, CodesStayInRange) {
    PortableRng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const QuantSpec s = spec(static_cast<int>(2 + rng.below(3)), rng.below(2) == 0,
                                 Granularity::PerGroup, std::size_t{4});
        std::vector<double> v(2 * 8);
        for (auto& x : v) x = rng.normal() * 10.0;
        Tensor t = Tensor::matrix(2, 8, v);
        auto q = quantize(t, compute_qparams(t, s, AxisRole::WeightRows));
        const auto r = quant_range(s);
        std::set<std::int32_t> seen(q.codes.begin(), q.codes.end());
        EXPECT_GE(*seen.begin(), r.min);
        EXPECT_LE(*seen.rbegin(), r.max);
    }
}
