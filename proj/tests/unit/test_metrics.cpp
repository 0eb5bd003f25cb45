#include <cmath>
#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "edgeptq/error.hpp"
#include "edgeptq/metrics.hpp"
#include "edgeptq/model_graph.hpp"
#include "edgeptq/random.hpp"

using namespace edgeptq;

TEST(Kurtosis, SmallVector) {
    // mean 2.5, population variance 1.25, fourth moment 2.5625.
    const std::vector<double> v{1, 2, 3, 4};
    EXPECT_NEAR(kurtosis(v), 2.5625 / (1.25 * 1.25), 1e-12);
    EXPECT_NEAR(kurtosis(v), 1.64, 1e-6);
}

TEST(Kurtosis, TwoPointDistributionIsOne) {
    const std::vector<double> v{-3, 5, -3, 5};
    EXPECT_NEAR(kurtosis(v), 1.0, 1e-15);
}

TEST(Kurtosis, UndefinedCases) {
    EXPECT_THROW(kurtosis(std::vector<double>{2, 2, 2}), UndefinedStatisticError);
    EXPECT_THROW(kurtosis(std::vector<double>{1}), UndefinedStatisticError);
    EXPECT_THROW(kurtosis(std::vector<double>{}), UndefinedStatisticError);
}

TEST(Kurtosis, MonteCarloUniform) {
    // Uniform distribution: kurtosis 9/5.
    PortableRng rng(8);
    std::vector<double> v(200000);
    for (auto& x : v) x = rng.uniform();
    EXPECT_NEAR(kurtosis(v), 1.8, 0.02);
}

TEST(Wer, Normalization) {
    EXPECT_EQ(normalize_words("Hello, World!  it's  a TEST."),
              (std::vector<std::string>{"hello", "world", "it's", "a", "test"}));
    EXPECT_EQ(normalize_words("well-known 'quoted'"), (std::vector<std::string>{"well", "known", "quoted"}));
    EXPECT_TRUE(normalize_words("  ... ").empty());
}

TEST(Wer, ListedExamples) {
    const std::vector<std::string> abc{"a", "b", "c"}, axc{"a", "x", "c"}, ab{"a", "b"};
    EXPECT_EQ(wer(abc, abc), 0.0);
    EXPECT_EQ(wer(abc, axc), 1.0 / 3.0);
    EXPECT_EQ(wer(ab, std::vector<std::string>{}), 1.0);
    EXPECT_THROW(wer(std::vector<std::string>{}, ab), ConfigError);
}

TEST(Wer, EditBreakdown) {
    const std::vector<std::string> ref{"the", "cat", "sat"};
    const std::vector<std::string> hyp{"a", "cat", "sat", "down", "here"};
    const auto e = word_edits(ref, hyp);
    EXPECT_EQ(e.substitutions, 1u);
    EXPECT_EQ(e.insertions, 2u);
    EXPECT_EQ(e.deletions, 0u);
    EXPECT_NEAR(wer(ref, hyp), 1.0, 1e-15);  // may reach or exceed 1
}

TEST(Wer, MatchesBruteForceDistance) {
    // Recursive Levenshtein as an oracle on short random sequences.
    std::function<std::size_t(const std::vector<std::string>&, std::size_t, const std::vector<std::string>&,
                              std::size_t)>
        lev = [&](const auto& a, std::size_t i, const auto& b, std::size_t j) -> std::size_t {
        if (i == a.size()) return b.size() - j;
        if (j == b.size()) return a.size() - i;
        const std::size_t sub = lev(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
        return std::min({sub, lev(a, i + 1, b, j) + 1, lev(a, i, b, j + 1) + 1});
    };
    PortableRng rng(9);
    for (int t = 0; t < 300; ++t) {
        std::vector<std::string> a(1 + rng.below(6)), b(rng.below(7));
        for (auto& w : a) w = std::string(1, static_cast<char>('a' + rng.below(3)));
        for (auto& w : b) w = std::string(1, static_cast<char>('a' + rng.below(3)));
        EXPECT_EQ(word_edits(a, b).total(), lev(a, 0, b, 0));
    }
}

TEST(Cost, PublishedTinyCells) {
    const auto r = cost_report(find_descriptor("whisper-tiny"), {4, 8});
    EXPECT_NEAR(r.encoder.weight_size_mb, 3.82, 0.01);
    EXPECT_NEAR(r.encoder.memory_io_mb, 263.27, 0.05);
    EXPECT_NEAR(r.decoder.weight_size_mb, 14.78, 0.01);
    EXPECT_NEAR(r.decoder.memory_io_mb, 25.61, 0.05);
    EXPECT_EQ(round_to(r.relative_bops_pct, 2), 3.13);
}

TEST(Cost, PublishedMoonshineBaseCells) {
    const auto r = cost_report(find_descriptor("moonshine-base"), {8, 16});
    EXPECT_NEAR(r.encoder.weight_size_mb, 20.15, 0.01);
    EXPECT_NEAR(r.encoder.memory_io_mb, 165.54, 0.05);
    EXPECT_NEAR(r.decoder.memory_io_mb, 58.20, 0.05);
    EXPECT_EQ(round_to(r.relative_bops_pct, 2), 12.5);
}

TEST(Cost, FullPrecisionIsIdentity) {
    const auto& d = find_descriptor("whisper-small");
    const auto r = cost_report(d, {32, 32});
    EXPECT_DOUBLE_EQ(r.encoder.weight_size_mb, d.encoder_weight_mb_fp32);
    EXPECT_DOUBLE_EQ(r.decoder.memory_io_mb, d.decoder_io_mb_fp32);
    EXPECT_DOUBLE_EQ(r.relative_bops_pct, 100.0);
}

TEST(Cost, Formulas) {
    EXPECT_DOUBLE_EQ(weight_size_mb(100.0, 4), 12.5);
    EXPECT_DOUBLE_EQ(memory_io_mb(300.0, 100.0, {8, 16}), 25.0 + 100.0);
    EXPECT_DOUBLE_EQ(relative_bops_pct({4, 8}), 3.125);
    EXPECT_THROW(relative_bops_pct({5, 8}), ConfigError);
    EXPECT_THROW(weight_size_mb(0.0, 4), ConfigError);
    EXPECT_THROW(memory_io_mb(10.0, 20.0, {8, 8}), ConfigError);
}

TEST(Cost, RoundingIsHalfAwayFromZero) {
    EXPECT_EQ(format_fixed(3.125, 2), "3.13");
    EXPECT_EQ(format_fixed(6.25, 2), "6.25");
    EXPECT_EQ(format_fixed(12.5, 2), "12.50");
    EXPECT_EQ(format_fixed(1.00005, 4), "1.0001");
}

TEST(Cost, CsvAndMarkdownTables) {
    std::vector<CostReport> rows{cost_report(find_descriptor("whisper-tiny"), {4, 8})};
    const std::string csv = cost_table_csv(rows);
    EXPECT_NE(csv.find("whisper-tiny,4/8,3.82,263.27,14.78,25.61,3.13"), std::string::npos) << csv;
    const std::string md = cost_table_markdown(rows);
    EXPECT_NE(md.find("| whisper-tiny | 4/8 | 3.82 | 263.27 | 14.78 | 25.61 | 3.13 |"), std::string::npos) << md;
}

TEST(Table8, AllCellsReproduce) {
    const auto cells = table8_check();
    ASSERT_EQ(cells.size(), 100u);
    for (const auto& c : cells) EXPECT_TRUE(c.pass) << c.cell << " expected " << c.expected << " got " << c.actual;
    EXPECT_EQ(table8_bit_configs().size(), 4u);
}

TEST(Table8, CorruptedDescriptorNamesFailingCell) {
    std::vector<ArchDescriptor> ds = builtin_descriptors();
    for (auto& d : ds) {
        if (d.name == "moonshine-tiny") d.decoder_io_mb_fp32 += 1.0;
    }
    const auto cells = table8_check(ds);
    std::vector<std::string> failing;
    for (const auto& c : cells) {
        if (!c.pass) failing.push_back(c.cell);
    }
    ASSERT_FALSE(failing.empty());
    for (const auto& f : failing) {
        EXPECT_NE(f.find("moonshine-tiny"), std::string::npos) << f;
        EXPECT_NE(f.find("decoder memory_io_mb"), std::string::npos) << f;
    }
}

TEST(Table8, MissingDescriptorFails) {
    std::vector<ArchDescriptor> ds = builtin_descriptors();
    ds.pop_back();
    std::size_t failed = 0;
    for (const auto& c : table8_check(ds)) failed += c.pass ? 0 : 1;
    EXPECT_GT(failed, 0u);
}
