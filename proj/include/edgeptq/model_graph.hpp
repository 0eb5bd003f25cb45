#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "edgeptq/tensor.hpp"

namespace edgeptq {

enum class Activation {
    Identity,
    Gelu,
    /// This layer is the gate of a SwiGLU pair; the next layer is the up
    /// projection. Both read the same input and the pair emits
    /// silu(x W_gate^T) * (x W_up^T).
    SwiGluGate,
};

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

double gelu(double x);
double silu(double x);

struct LinearLayer {
    std::string name;
    Tensor weight;  // out x in
    Activation activation = Activation::Identity;
};

/// Sequential network of linear layers with pointwise nonlinearities.
class LayerGraph {
public:
    LayerGraph() = default;
    /// Throws ShapeError on non-conformable neighbours and ConfigError on
    /// duplicate names or a dangling SwiGLU gate.
    explicit LayerGraph(std::vector<LinearLayer> layers);

    const std::vector<LinearLayer>& layers() const noexcept { return layers_; }
    std::size_t size() const noexcept { return layers_.size(); }
    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const;

    /// Copy with every layer weight replaced, in order.
    LayerGraph with_weights(std::vector<Tensor> weights) const;

private:
    std::vector<LinearLayer> layers_;
};

/// Per-layer input activations, one matrix per calibration batch.
struct ActivationTrace {
    std::vector<std::vector<Tensor>> layers;

    /// Appends every batch of `other`; both traces must cover the same layers.
    void append(const ActivationTrace& other);
    /// All batches of layer `i` stacked along the sample axis.
    Tensor stacked(std::size_t i) const;
};

struct ForwardResult {
    Tensor output;
    ActivationTrace trace;
};

ForwardResult forward_capture(const LayerGraph& graph, const Tensor& inputs);

/// Deterministic sequential toy network: `n_layers` dim x dim layers with
/// N(0, 1/dim) weights from a seeded generator, GELU between layers and an
/// identity output layer.
LayerGraph toy_transformer(std::uint64_t seed, std::size_t dim, std::size_t n_layers);

/// Graph manifest: {"layers": [{name, activation, shape, file}]} next to one
/// float32 payload per layer.
void save_graph(const LayerGraph& graph, const std::filesystem::path& manifest);
LayerGraph load_graph(const std::filesystem::path& manifest);

/// Encoder/decoder aggregates used by the deployment cost model.
struct ArchDescriptor {
    std::string name;
    std::uint64_t encoder_params = 0;
    std::uint64_t decoder_params = 0;
    double encoder_weight_mb_fp32 = 0.0;
    double decoder_weight_mb_fp32 = 0.0;
    double encoder_io_mb_fp32 = 0.0;
    double decoder_io_mb_fp32 = 0.0;
    int dimension = 0;
    int encoder_layers = 0;
    int decoder_layers = 0;
    int attention_heads = 0;
    std::string encoder_ffn;
    std::string decoder_ffn;
    double total_params_millions = 0.0;

    /// Weight MB must equal 4 bytes per parameter within 0.01 MB.
    void validate() const;
    bool operator==(const ArchDescriptor&) const = default;
};

const std::vector<ArchDescriptor>& builtin_descriptors();
const ArchDescriptor& find_descriptor(std::string_view name);

nlohmann::json to_json(const ArchDescriptor& d);
ArchDescriptor descriptor_from_json(const nlohmann::json& j);

}  // namespace edgeptq
