#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "edgeptq/edgeptq.h"

namespace fs = std::filesystem;

namespace {

const char* kConfig = R"({
    "model": {"toy": {"seed": 2, "dim": 6, "layers": 2}},
    "calibration": {"synthetic": {"seed": 3, "samples": 3, "tokens": 5}},
    "arch": "moonshine-tiny",
    "report_dir": "rel-out",
    "sweep": [
        {"label": "rtn", "method": "RTN", "weight_bits": 8, "act_bits": 8},
        {"label": "gptq", "method": "GPTQ", "weight_bits": 4}
    ]
})";

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("edgeptq_capi_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST(CApi, StatusStrings) {
    EXPECT_STREQ(eptq_version(), "0.1.0");
    EXPECT_STREQ(eptq_status_string(EPTQ_OK), "ok");
    for (int s = EPTQ_OK; s <= EPTQ_INTERNAL_ERROR; ++s) {
        EXPECT_GT(std::strlen(eptq_status_string(static_cast<eptq_status>(s))), 0u);
    }
}

TEST(CApi, NullArgumentsAreRejected) {
    double out = 0.0;
    EXPECT_EQ(eptq_kurtosis(nullptr, 3, &out), EPTQ_INVALID_ARGUMENT);
    EXPECT_NE(std::string(eptq_last_error()).find("null"), std::string::npos);
    EXPECT_EQ(eptq_word_edits("a", nullptr, nullptr), EPTQ_INVALID_ARGUMENT);
    EXPECT_EQ(eptq_config_parse(nullptr, nullptr, nullptr), EPTQ_INVALID_ARGUMENT);
    EXPECT_EQ(eptq_sweep_run(nullptr, nullptr), EPTQ_INVALID_ARGUMENT);
    eptq_config_free(nullptr);
    eptq_report_free(nullptr);
    eptq_table_check_free(nullptr);
}

TEST(CApi, Kurtosis) {
    const double v[] = {1, 2, 3, 4};
    double k = 0.0;
    ASSERT_EQ(eptq_kurtosis(v, 4, &k), EPTQ_OK);
    EXPECT_NEAR(k, 1.64, 1e-12);
    const double c[] = {5, 5, 5};
    EXPECT_EQ(eptq_kurtosis(c, 3, &k), EPTQ_UNDEFINED_STATISTIC);
}

TEST(CApi, WordErrorRate) {
    eptq_edit_counts e{};
    ASSERT_EQ(eptq_word_edits("A b, c.", "a x c", &e), EPTQ_OK);
    EXPECT_EQ(e.substitutions, 1u);
    EXPECT_EQ(e.reference_words, 3u);
    const char* refs[] = {"a b c", "d e"};
    const char* hyps[] = {"a b c", ""};
    double w = 0.0;
    ASSERT_EQ(eptq_corpus_wer(refs, hyps, 2, &w), EPTQ_OK);
    EXPECT_DOUBLE_EQ(w, 2.0 / 5.0);
    const char* empty[] = {"..."};
    EXPECT_EQ(eptq_corpus_wer(empty, empty, 1, &w), EPTQ_CONFIG_ERROR);
}

TEST(CApi, CostModel) {
    ASSERT_EQ(eptq_descriptor_count(), 5u);
    const char* name = nullptr;
    ASSERT_EQ(eptq_descriptor_name(0, &name), EPTQ_OK);
    EXPECT_STREQ(name, "whisper-tiny");
    EXPECT_EQ(eptq_descriptor_name(5, &name), EPTQ_INVALID_ARGUMENT);
    eptq_cost c{};
    ASSERT_EQ(eptq_cost_report("whisper-base", 8, 16, &c), EPTQ_OK);
    EXPECT_NEAR(c.encoder_weight_mb, 19.82, 0.005);
    EXPECT_NEAR(c.relative_bops_pct, 12.5, 1e-12);
    EXPECT_EQ(eptq_cost_report("whisper-base", 5, 16, &c), EPTQ_CONFIG_ERROR);
    EXPECT_EQ(eptq_cost_report("nope", 8, 16, &c), EPTQ_CONFIG_ERROR);
}

TEST(CApi, TableCheck) {
    eptq_table_check* t = nullptr;
    ASSERT_EQ(eptq_table_check_run(&t), EPTQ_OK);
    EXPECT_EQ(eptq_table_check_count(t), 100u);
    EXPECT_EQ(eptq_table_check_passed(t), 1);
    eptq_cell cell{};
    ASSERT_EQ(eptq_table_check_cell(t, 0, &cell), EPTQ_OK);
    EXPECT_NE(std::string(cell.name).find("whisper-tiny"), std::string::npos);
    EXPECT_EQ(cell.pass, 1);
    EXPECT_EQ(eptq_table_check_cell(t, 100, &cell), EPTQ_INVALID_ARGUMENT);
    eptq_table_check_free(t);
}

TEST(CApi, ConfigErrorsCarryMessages) {
    eptq_config* cfg = nullptr;
    EXPECT_EQ(eptq_config_parse("{", nullptr, &cfg), EPTQ_CONFIG_ERROR);
    EXPECT_EQ(cfg, nullptr);
    EXPECT_EQ(eptq_config_parse(R"({"model": {"toy": {}}, "calibration": {"synthetic": {}},
                                    "sweep": [{"method": "RTN", "act_bits": 7}]})",
                                nullptr, &cfg),
              EPTQ_CONFIG_ERROR);
    EXPECT_NE(std::string(eptq_last_error()).find("sweep[0].act_bits"), std::string::npos);
    EXPECT_EQ(eptq_config_load("/nonexistent/run.json", &cfg), EPTQ_IO_ERROR);
}

TEST(CApi, SweepAndReport) {
    const fs::path dir = scratch("sweep");
    eptq_config* cfg = nullptr;
    ASSERT_EQ(eptq_config_parse(kConfig, dir.c_str(), &cfg), EPTQ_OK) << eptq_last_error();
    EXPECT_EQ(eptq_config_sweep_size(cfg), 2u);
    const char* rd = nullptr;
    ASSERT_EQ(eptq_config_report_dir(cfg, &rd), EPTQ_OK);
    EXPECT_EQ(fs::path(rd), dir / "rel-out");
    ASSERT_EQ(eptq_config_set_report_dir(cfg, (dir / "override").c_str()), EPTQ_OK);
    ASSERT_EQ(eptq_config_report_dir(cfg, &rd), EPTQ_OK);
    EXPECT_EQ(fs::path(rd), dir / "override");

    eptq_report* rep = nullptr;
    ASSERT_EQ(eptq_sweep_run(cfg, &rep), EPTQ_OK) << eptq_last_error();
    EXPECT_EQ(eptq_report_rows(rep), 2u);
    const char* csv = nullptr;
    ASSERT_EQ(eptq_report_csv(rep, &csv), EPTQ_OK);
    EXPECT_NE(std::string(csv).find("\nrtn,RTN,8,8,"), std::string::npos) << csv;
    const char* md = nullptr;
    ASSERT_EQ(eptq_report_markdown(rep, &md), EPTQ_OK);
    EXPECT_EQ(std::string(md).rfind("| label |", 0), 0u);
    ASSERT_EQ(eptq_report_write(rep, rd), EPTQ_OK);
    EXPECT_TRUE(fs::exists(dir / "override" / "report.csv"));
    eptq_report_free(rep);

    double loss = -1.0;
    ASSERT_EQ(eptq_quantize_run(cfg, 1, (dir / "q").c_str(), &loss), EPTQ_OK) << eptq_last_error();
    EXPECT_GT(loss, 0.0);
    EXPECT_TRUE(fs::exists(dir / "q" / "graph.json"));
    EXPECT_TRUE(fs::exists(dir / "q" / "quant_params.json"));
    EXPECT_EQ(eptq_quantize_run(cfg, 2, (dir / "q").c_str(), &loss), EPTQ_INVALID_ARGUMENT);
    eptq_config_free(cfg);
}

TEST(CApi, MissingCalibrationIsAnIoError) {
    const fs::path dir = scratch("missing");
    eptq_config* cfg = nullptr;
    ASSERT_EQ(eptq_config_parse(R"({"model": {"toy": {}}, "calibration": {"path": "nowhere"},
                                    "sweep": [{"method": "RTN"}]})",
                                dir.c_str(), &cfg),
              EPTQ_OK);
    eptq_report* rep = nullptr;
    EXPECT_EQ(eptq_sweep_run(cfg, &rep), EPTQ_IO_ERROR);
    EXPECT_EQ(rep, nullptr);
    eptq_config_free(cfg);
}
