#include "edgeptq/model_graph.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "edgeptq/error.hpp"
#include "edgeptq/random.hpp"
#include "edgeptq/tensor_io.hpp"
#include "linalg.hpp"

namespace edgeptq {

namespace fs = std::filesystem;

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Gelu: return "gelu";
        case Activation::SwiGluGate: return "swiglu-gate";
    }
    return "?";
}

Activation activation_from_string(std::string_view s) {
    if (s == "identity") return Activation::Identity;
    if (s == "gelu") return Activation::Gelu;
    if (s == "swiglu-gate") return Activation::SwiGluGate;
    throw ConfigError("unknown activation '" + std::string(s) + "'");
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double silu(double x) { return x / (1.0 + std::exp(-x)); }

LayerGraph::LayerGraph(std::vector<LinearLayer> layers) : layers_(std::move(layers)) {
    std::set<std::string> names;
    std::size_t expected_in = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.weight.rank() != 2) throw ShapeError("layer '" + l.name + "' weight must be a matrix");
        if (!names.insert(l.name).second) throw ConfigError("duplicate layer name '" + l.name + "'");
        if (i > 0 && l.weight.cols() != expected_in) {
            throw ShapeError("layer '" + l.name + "' expects input " + std::to_string(l.weight.cols()) +
                             " but receives " + std::to_string(expected_in));
        }
        if (l.activation == Activation::SwiGluGate) {
            if (i + 1 >= layers_.size()) throw ConfigError("SwiGLU gate '" + l.name + "' has no up projection");
            const auto& up = layers_[i + 1];
            if (up.weight.shape() != l.weight.shape()) {
                throw ShapeError("SwiGLU pair '" + l.name + "'/'" + up.name + "' must have equal shapes");
            }
            if (!names.insert(up.name).second) throw ConfigError("duplicate layer name '" + up.name + "'");
            if (up.activation == Activation::SwiGluGate) {
                throw ConfigError("up projection '" + up.name + "' cannot itself be a gate");
            }
            expected_in = l.weight.rows();
            ++i;
            continue;
        }
        expected_in = l.weight.rows();
    }
}

std::size_t LayerGraph::input_dim() const { return layers_.empty() ? 0 : layers_.front().weight.cols(); }

std::size_t LayerGraph::output_dim() const { return layers_.empty() ? 0 : layers_.back().weight.rows(); }

std::size_t LayerGraph::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size();
    return n;
}

LayerGraph LayerGraph::with_weights(std::vector<Tensor> weights) const {
    if (weights.size() != layers_.size()) throw ShapeError("weight count does not match layer count");
    std::vector<LinearLayer> layers = layers_;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (weights[i].shape() != layers[i].weight.shape()) {
            throw ShapeError("replacement weight for '" + layers[i].name + "' has the wrong shape");
        }
        layers[i].weight = std::move(weights[i]);
    }
    return LayerGraph(std::move(layers));
}

void ActivationTrace::append(const ActivationTrace& other) {
    if (layers.empty()) {
        layers = other.layers;
        return;
    }
    if (other.layers.size() != layers.size()) throw ShapeError("traces cover different layer counts");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].insert(layers[i].end(), other.layers[i].begin(), other.layers[i].end());
    }
}

Tensor ActivationTrace::stacked(std::size_t i) const { return concat_rows(layers.at(i)); }

namespace {

Tensor apply(const Tensor& m, double (*fn)(double)) {
    Tensor out = m;
    for (double& v : out.data()) v = fn(v);
    return out;
}

}  // namespace

ForwardResult forward_capture(const LayerGraph& graph, const Tensor& inputs) {
    if (graph.size() == 0) throw ShapeError("graph has no layers");
    if (inputs.rank() > 2) throw ShapeError("forward inputs must be a matrix");
    if (inputs.cols() != graph.input_dim()) {
        throw ShapeError("input width " + std::to_string(inputs.cols()) + " does not match first layer input " +
                         std::to_string(graph.input_dim()));
    }
    ForwardResult result;
    result.trace.layers.resize(graph.size());
    Tensor x = inputs.rank() == 1 ? Tensor::matrix(1, inputs.size(), {inputs.data().begin(), inputs.data().end()})
                                  : inputs;
    const auto& layers = graph.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        result.trace.layers[i].push_back(x);
        if (l.activation == Activation::SwiGluGate) {
            result.trace.layers[i + 1].push_back(x);
            Tensor gate = apply(detail::matmul_nt(x, l.weight), silu);
            const Tensor up = detail::matmul_nt(x, layers[i + 1].weight);
            for (std::size_t k = 0; k < gate.size(); ++k) gate[k] *= up[k];
            x = std::move(gate);
            ++i;
            continue;
        }
        Tensor y = detail::matmul_nt(x, l.weight);
        x = l.activation == Activation::Gelu ? apply(y, gelu) : std::move(y);
    }
    result.output = std::move(x);
    return result;
}

LayerGraph toy_transformer(std::uint64_t seed, std::size_t dim, std::size_t n_layers) {
    if (dim < 2) throw ConfigError("toy model dimension must be at least 2");
    if (n_layers < 1) throw ConfigError("toy model needs at least one layer");
    PortableRng rng(seed);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
    std::vector<LinearLayer> layers;
    for (std::size_t l = 0; l < n_layers; ++l) {
        std::vector<double> w(dim * dim);
        for (double& v : w) v = stddev * rng.normal();
        layers.push_back({"fc" + std::to_string(l), Tensor::matrix(dim, dim, std::move(w)),
                          l + 1 == n_layers ? Activation::Identity : Activation::Gelu});
    }
    return LayerGraph(std::move(layers));
}

void save_graph(const LayerGraph& graph, const fs::path& manifest) {
    const fs::path dir = manifest.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : graph.layers()) {
        TensorEntry e{l.name, l.weight.shape(), l.name + ".f32"};
        write_f32(dir / e.file, l.weight);
        auto j = to_json(e);
        j["activation"] = std::string(to_string(l.activation));
        layers.push_back(std::move(j));
    }
    std::ofstream out(manifest);
    if (!out) throw IoError("cannot write " + manifest.string());
    out << nlohmann::json{{"layers", layers}}.dump(2) << "\n";
}

LayerGraph load_graph(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open graph manifest " + manifest.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(manifest.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array()) {
        throw FormatError(manifest.string() + ": expected an object with a 'layers' array");
    }
    const fs::path dir = manifest.parent_path();
    std::vector<LinearLayer> layers;
    for (const auto& entry : j["layers"]) {
        const auto e = tensor_entry_from_json(entry);
        if (e.shape.size() != 2) throw FormatError("layer '" + e.name + "' must have a 2-D shape");
        const auto act = entry.value("activation", std::string("identity"));
        layers.push_back({e.name, read_f32(dir / e.file, e.shape), activation_from_string(act)});
    }
    return LayerGraph(std::move(layers));
}

void ArchDescriptor::validate() const {
    auto check = [&](const char* part, std::uint64_t params, double mb) {
        if (std::abs(4.0 * static_cast<double>(params) / 1e6 - mb) > 0.01) {
            throw ConfigError(name + ": " + part + " weight MB " + std::to_string(mb) + " disagrees with " +
                              std::to_string(params) + " fp32 parameters");
        }
    };
    check("encoder", encoder_params, encoder_weight_mb_fp32);
    check("decoder", decoder_params, decoder_weight_mb_fp32);
    if (encoder_io_mb_fp32 < encoder_weight_mb_fp32 || decoder_io_mb_fp32 < decoder_weight_mb_fp32) {
        throw ConfigError(name + ": memory I/O baseline smaller than the weights it loads");
    }
}

namespace {

ArchDescriptor make_descriptor(std::string name, double enc_w, double enc_io, double dec_w, double dec_io, int dim,
                               int enc_layers, int dec_layers, int heads, std::string dec_ffn, double params_m) {
    ArchDescriptor d;
    d.name = std::move(name);
    d.encoder_weight_mb_fp32 = enc_w;
    d.encoder_io_mb_fp32 = enc_io;
    d.decoder_weight_mb_fp32 = dec_w;
    d.decoder_io_mb_fp32 = dec_io;
    d.encoder_params = static_cast<std::uint64_t>(std::llround(enc_w * 1e6 / 4.0));
    d.decoder_params = static_cast<std::uint64_t>(std::llround(dec_w * 1e6 / 4.0));
    d.dimension = dim;
    d.encoder_layers = enc_layers;
    d.decoder_layers = dec_layers;
    d.attention_heads = heads;
    d.encoder_ffn = "gelu";
    d.decoder_ffn = std::move(dec_ffn);
    d.total_params_millions = params_m;
    return d;
}

}  // namespace

const std::vector<ArchDescriptor>& builtin_descriptors() {
    // fp32 baselines for a 30 s input; architecture fields per model card.
    static const std::vector<ArchDescriptor> table = {
        make_descriptor("whisper-tiny", 30.53, 1068.35, 118.21, 161.55, 384, 4, 4, 6, "gelu", 37.8),
        make_descriptor("whisper-base", 79.29, 2143.21, 208.01, 294.69, 512, 6, 6, 8, "gelu", 72.6),
        make_descriptor("whisper-small", 348.01, 6505.61, 614.32, 874.36, 768, 12, 12, 12, "gelu", 244.0),
        make_descriptor("moonshine-tiny", 30.72, 195.23, 77.65, 95.14, 288, 6, 6, 8, "swiglu", 27.1),
        make_descriptor("moonshine-base", 80.61, 371.40, 165.44, 199.13, 416, 8, 8, 8, "swiglu", 61.5),
    };
    return table;
}

const ArchDescriptor& find_descriptor(std::string_view name) {
    for (const auto& d : builtin_descriptors()) {
        if (d.name == name) return d;
    }
    throw ConfigError("unknown model descriptor '" + std::string(name) + "'");
}

nlohmann::json to_json(const ArchDescriptor& d) {
    return {
        {"name", d.name},
        {"encoder_params", d.encoder_params},
        {"decoder_params", d.decoder_params},
        {"encoder_weight_mb_fp32", d.encoder_weight_mb_fp32},
        {"decoder_weight_mb_fp32", d.decoder_weight_mb_fp32},
        {"encoder_io_mb_fp32", d.encoder_io_mb_fp32},
        {"decoder_io_mb_fp32", d.decoder_io_mb_fp32},
        {"dimension", d.dimension},
        {"encoder_layers", d.encoder_layers},
        {"decoder_layers", d.decoder_layers},
        {"attention_heads", d.attention_heads},
        {"encoder_ffn", d.encoder_ffn},
        {"decoder_ffn", d.decoder_ffn},
        {"total_params_millions", d.total_params_millions},
    };
}

ArchDescriptor descriptor_from_json(const nlohmann::json& j) {
    ArchDescriptor d;
    try {
        d.name = j.at("name").get<std::string>();
        d.encoder_params = j.at("encoder_params").get<std::uint64_t>();
        d.decoder_params = j.at("decoder_params").get<std::uint64_t>();
        d.encoder_weight_mb_fp32 = j.at("encoder_weight_mb_fp32").get<double>();
        d.decoder_weight_mb_fp32 = j.at("decoder_weight_mb_fp32").get<double>();
        d.encoder_io_mb_fp32 = j.at("encoder_io_mb_fp32").get<double>();
        d.decoder_io_mb_fp32 = j.at("decoder_io_mb_fp32").get<double>();
        d.dimension = j.value("dimension", 0);
        d.encoder_layers = j.value("encoder_layers", 0);
        d.decoder_layers = j.value("decoder_layers", 0);
        d.attention_heads = j.value("attention_heads", 0);
        d.encoder_ffn = j.value("encoder_ffn", std::string());
        d.decoder_ffn = j.value("decoder_ffn", std::string());
        d.total_params_millions = j.value("total_params_millions", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad descriptor: ") + e.what());
    }
    d.validate();
    return d;
}

}  // namespace edgeptq
