#include "edgeptq/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "edgeptq/error.hpp"
#include "edgeptq/metrics.hpp"
#include "edgeptq/random.hpp"

namespace edgeptq {

namespace fs = std::filesystem;

std::size_t CalibArchive::feature_dim() const { return samples.empty() ? 0 : samples.front().cols(); }

CalibArchive load_archive(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open calibration manifest " + manifest_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw FormatError(manifest_path.string() + ": manifest must be a JSON array");

    CalibArchive archive;
    for (const auto& entry : j) {
        auto e = tensor_entry_from_json(entry);
        Tensor t = read_f32(dir / e.file, e.shape);
        if (!archive.samples.empty() && t.cols() != archive.feature_dim()) {
            throw FormatError("sample '" + e.name + "' has feature dim " + std::to_string(t.cols()) + ", expected " +
                              std::to_string(archive.feature_dim()));
        }
        archive.manifest.push_back(std::move(e));
        archive.samples.push_back(std::move(t));
    }
    return archive;
}

void save_archive(const CalibArchive& archive, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::json manifest = nlohmann::json::array();
    for (std::size_t i = 0; i < archive.samples.size(); ++i) {
        const auto& e = archive.manifest.at(i);
        write_f32(dir / e.file, archive.samples[i]);
        manifest.push_back(to_json(e));
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << "\n";
}

CalibArchive make_archive(std::vector<Tensor> samples) {
    CalibArchive archive;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%03zu", i);
        if (i > 0 && samples[i].cols() != samples[0].cols()) {
            throw ShapeError("calibration samples must share the feature dimension");
        }
        archive.manifest.push_back({name, samples[i].shape(), std::string(name) + ".f32"});
    }
    archive.samples = std::move(samples);
    return archive;
}

CalibArchive sample_subset(const CalibArchive& archive, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw ConfigError("calibration subset size must be positive");
    if (k > archive.size()) {
        throw ConfigError("requested " + std::to_string(k) + " calibration samples but the archive holds " +
                          std::to_string(archive.size()));
    }
    // A seeded priority per sample; the k smallest priorities win. Growing k
    // only appends to the selection, so subsets nest.
    PortableRng rng(seed);
    std::vector<std::uint64_t> priority(archive.size());
    for (auto& p : priority) p = rng.next_u64();
    std::vector<std::size_t> order(archive.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return priority[a] < priority[b]; });
    order.resize(k);
    std::sort(order.begin(), order.end());

    CalibArchive out;
    for (auto i : order) {
        out.manifest.push_back(archive.manifest[i]);
        out.samples.push_back(archive.samples[i]);
    }
    return out;
}

ActivationTrace capture_trace(const LayerGraph& graph, const CalibArchive& archive) {
    if (archive.size() == 0) throw ConfigError("calibration archive is empty");
    ActivationTrace trace;
    for (const auto& sample : archive.samples) trace.append(forward_capture(graph, sample).trace);
    return trace;
}

std::vector<LayerStats> collect_stats(const ActivationTrace& trace) {
    if (trace.layers.empty()) throw ConfigError("activation trace is empty");
    std::vector<LayerStats> out;
    for (const auto& batches : trace.layers) {
        if (batches.empty()) throw ConfigError("activation trace has a layer without batches");
        LayerStats st;
        st.max_abs.assign(batches.front().cols(), 0.0);
        st.min = batches.front()[0];
        st.max = batches.front()[0];
        std::vector<double> all;
        for (const auto& b : batches) {
            if (b.cols() != st.max_abs.size()) throw ShapeError("batches of one layer disagree on feature dim");
            for (std::size_t r = 0; r < b.rows(); ++r) {
                for (std::size_t c = 0; c < b.cols(); ++c) {
                    const double v = b.at(r, c);
                    st.max_abs[c] = std::max(st.max_abs[c], std::abs(v));
                    st.min = std::min(st.min, v);
                    st.max = std::max(st.max, v);
                }
            }
            all.insert(all.end(), b.data().begin(), b.data().end());
        }
        st.count = all.size();
        // Canonical summation order: identical regardless of batching.
        std::sort(all.begin(), all.end());
        try {
            st.kurtosis = kurtosis(all);
        } catch (const UndefinedStatisticError&) {
            st.kurtosis.reset();
        }
        out.push_back(std::move(st));
    }
    return out;
}

}  // namespace edgeptq
