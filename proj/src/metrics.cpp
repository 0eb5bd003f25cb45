#include "edgeptq/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "edgeptq/error.hpp"

namespace edgeptq {

double kurtosis(std::span<const double> values) {
    const std::size_t m = values.size();
    if (m < 2) throw UndefinedStatisticError("kurtosis needs at least two values");
    long double sum = 0.0L;
    for (double v : values) sum += v;
    const long double mean = sum / static_cast<long double>(m);
    long double m2 = 0.0L, m4 = 0.0L;
    for (double v : values) {
        const long double d = v - mean;
        const long double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= static_cast<long double>(m);
    m4 /= static_cast<long double>(m);
    if (!(m2 > 0.0L)) throw UndefinedStatisticError("kurtosis is undefined for zero variance");
    return static_cast<double>(m4 / (m2 * m2));
}

std::vector<std::string> normalize_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    auto flush = [&] {
        // Drop apostrophes left dangling at word edges.
        while (!current.empty() && current.back() == '\'') current.pop_back();
        std::size_t lead = 0;
        while (lead < current.size() && current[lead] == '\'') ++lead;
        if (lead < current.size()) words.push_back(current.substr(lead));
        current.clear();
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (std::isalnum(c) || c == '\'' || c >= 0x80) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (c == '-') {
            flush();
        }
    }
    flush();
    return words;
}

EditCounts word_edits(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
    const std::size_t n = reference.size(), m = hypothesis.size();
    struct Cell {
        std::size_t cost;
        EditCounts edits;
    };
    // Rolling rows; ties prefer substitution, then deletion, then insertion.
    std::vector<Cell> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, {0, 0, j}};
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = {i, {0, i, 0}};
        for (std::size_t j = 1; j <= m; ++j) {
            const bool same = reference[i - 1] == hypothesis[j - 1];
            Cell diag = prev[j - 1];
            if (!same) {
                diag.cost += 1;
                diag.edits.substitutions += 1;
            }
            Cell del = prev[j];
            del.cost += 1;
            del.edits.deletions += 1;
            Cell ins = cur[j - 1];
            ins.cost += 1;
            ins.edits.insertions += 1;
            Cell best = diag;
            if (del.cost < best.cost) best = del;
            if (ins.cost < best.cost) best = ins;
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    return prev[m].edits;
}

double wer(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
    if (reference.empty()) throw ConfigError("WER needs a non-empty reference");
    return static_cast<double>(word_edits(reference, hypothesis).total()) / static_cast<double>(reference.size());
}

void BitConfig::validate() const {
    auto ok = [](int b) { return b == 2 || b == 3 || b == 4 || b == 8 || b == 16 || b == 32; };
    if (!ok(weight_bits)) throw ConfigError("weight_bits must be one of 2, 3, 4, 8, 16, 32");
    if (!ok(act_bits)) throw ConfigError("act_bits must be one of 2, 3, 4, 8, 16, 32");
}

double weight_size_mb(double fp32_mb, int weight_bits) {
    if (!(fp32_mb > 0.0)) throw ConfigError("fp32 weight size must be positive");
    return fp32_mb * weight_bits / 32.0;
}

double memory_io_mb(double fp32_io_mb, double fp32_weight_mb, const BitConfig& cfg) {
    cfg.validate();
    if (fp32_io_mb < fp32_weight_mb) throw ConfigError("memory I/O baseline is smaller than the weight size");
    const double activations = fp32_io_mb - fp32_weight_mb;
    return fp32_weight_mb * cfg.weight_bits / 32.0 + activations * cfg.act_bits / 32.0;
}

double relative_bops_pct(const BitConfig& cfg) {
    cfg.validate();
    return 100.0 * (cfg.weight_bits * cfg.act_bits) / (32.0 * 32.0);
}

CostReport cost_report(const ArchDescriptor& desc, const BitConfig& cfg) {
    cfg.validate();
    desc.validate();
    CostReport r;
    r.model = desc.name;
    r.bits = cfg;
    r.encoder = {weight_size_mb(desc.encoder_weight_mb_fp32, cfg.weight_bits),
                 memory_io_mb(desc.encoder_io_mb_fp32, desc.encoder_weight_mb_fp32, cfg)};
    r.decoder = {weight_size_mb(desc.decoder_weight_mb_fp32, cfg.weight_bits),
                 memory_io_mb(desc.decoder_io_mb_fp32, desc.decoder_weight_mb_fp32, cfg)};
    r.relative_bops_pct = relative_bops_pct(cfg);
    return r;
}

double round_to(double value, int digits) {
    const double factor = std::pow(10.0, digits);
    return std::round(value * factor) / factor;
}

std::string format_fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, round_to(value, digits));
    return buf;
}

namespace {

std::string bits_label(const BitConfig& b) { return std::to_string(b.weight_bits) + "/" + std::to_string(b.act_bits); }

}  // namespace

std::string cost_table_csv(std::span<const CostReport> rows) {
    std::ostringstream out;
    out << "model,bits_w_a,encoder_weight_mb,encoder_memory_io_mb,decoder_weight_mb,decoder_memory_io_mb,"
           "rel_gbops_pct\n";
    for (const auto& r : rows) {
        out << r.model << ',' << bits_label(r.bits) << ',' << format_fixed(r.encoder.weight_size_mb, 2) << ','
            << format_fixed(r.encoder.memory_io_mb, 2) << ',' << format_fixed(r.decoder.weight_size_mb, 2) << ','
            << format_fixed(r.decoder.memory_io_mb, 2) << ',' << format_fixed(r.relative_bops_pct, 2) << '\n';
    }
    return out.str();
}

std::string cost_table_markdown(std::span<const CostReport> rows) {
    std::ostringstream out;
    out << "| Model | # bits w/a | Enc. weight size (MB) | Enc. memory I/O (MB) | Dec. weight size (MB) | "
           "Dec. memory I/O (MB) | Rel. GBOPs (%) |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        out << "| " << r.model << " | " << bits_label(r.bits) << " | " << format_fixed(r.encoder.weight_size_mb, 2)
            << " | " << format_fixed(r.encoder.memory_io_mb, 2) << " | " << format_fixed(r.decoder.weight_size_mb, 2)
            << " | " << format_fixed(r.decoder.memory_io_mb, 2) << " | " << format_fixed(r.relative_bops_pct, 2)
            << " |\n";
    }
    return out.str();
}

}  // namespace edgeptq
